#include "aad/data/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>

#include "aad/data/array_io.hpp"
#include "aad/errors.hpp"
#include "aad/io/csv.hpp"

namespace aad::data {

namespace {

using nlohmann::json;

ArrayData matrix_to_array(const Eigen::MatrixXd& m) {
  ArrayData a;
  a.shape = {m.rows(), m.cols()};
  a.values.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      a.values[static_cast<std::size_t>(r * m.cols() + c)] =
          static_cast<float>(m(r, c));
  return a;
}

ArrayData vector_to_array(const Eigen::VectorXd& v) {
  ArrayData a;
  a.shape = {v.size()};
  a.values.resize(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    a.values[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
  return a;
}

Eigen::MatrixXd array_to_matrix(const ArrayData& a, const std::string& what) {
  if (a.shape.size() != 2)
    throw_io(what, ": expected rank-2 array, got rank ", a.shape.size());
  Eigen::MatrixXd m(a.shape[0], a.shape[1]);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = static_cast<double>(
          a.values[static_cast<std::size_t>(r * m.cols() + c)]);
  return m;
}

Eigen::VectorXd array_to_vector(const ArrayData& a, const std::string& what) {
  if (a.shape.size() != 1)
    throw_io(what, ": expected rank-1 array, got rank ", a.shape.size());
  Eigen::VectorXd v(a.shape[0]);
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = static_cast<double>(a.values[static_cast<std::size_t>(i)]);
  return v;
}

json manifest_json(const Dataset& ds) {
  json subjects = json::array();
  for (const auto& s : ds.subjects) {
    json trials = json::array();
    for (const auto& t : s.trials) {
      trials.push_back({{"id", t.trial_id},
                        {"eeg", t.eeg_file},
                        {"env_a", t.env_a_file},
                        {"env_b", t.env_b_file},
                        {"attended", stream_name(t.attended)},
                        {"stimulus_a", t.stimulus_a},
                        {"stimulus_b", t.stimulus_b},
                        {"attended_stimulus", t.attended_stimulus},
                        {"eeg_rate", t.eeg_rate},
                        {"audio_rate", t.audio_rate},
                        {"duration_s", t.duration_s}});
    }
    subjects.push_back({{"id", s.subject_id}, {"trials", std::move(trials)}});
  }
  return {{"format_version", ds.format_version},
          {"name", ds.name},
          {"channel_labels", ds.channel_labels},
          {"subjects", std::move(subjects)}};
}

Dataset manifest_from_json(const json& j) {
  Dataset ds;
  ds.format_version = j.at("format_version").get<int>();
  if (ds.format_version != 1)
    throw_io("manifest: unsupported format_version ", ds.format_version);
  ds.name = j.at("name").get<std::string>();
  ds.channel_labels = j.at("channel_labels").get<std::vector<std::string>>();
  for (const auto& js : j.at("subjects")) {
    SubjectData s;
    s.subject_id = js.at("id").get<std::string>();
    for (const auto& jt : js.at("trials")) {
      TrialRecord t;
      t.trial_id = jt.at("id").get<std::string>();
      t.eeg_file = jt.at("eeg").get<std::string>();
      t.env_a_file = jt.at("env_a").get<std::string>();
      t.env_b_file = jt.at("env_b").get<std::string>();
      const auto att = jt.at("attended").get<std::string>();
      if (att != "a" && att != "b")
        throw_io("manifest: trial ", t.trial_id, " has attended='", att,
                 "', expected 'a' or 'b'");
      t.attended = att == "a" ? Stream::kA : Stream::kB;
      t.stimulus_a = jt.at("stimulus_a").get<std::string>();
      t.stimulus_b = jt.at("stimulus_b").get<std::string>();
      t.attended_stimulus = jt.at("attended_stimulus").get<std::string>();
      t.eeg_rate = jt.at("eeg_rate").get<double>();
      t.audio_rate = jt.at("audio_rate").get<double>();
      t.duration_s = jt.at("duration_s").get<double>();
      s.trials.push_back(std::move(t));
    }
    ds.subjects.push_back(std::move(s));
  }
  return ds;
}

/// Collects invariant violations; load_arrays controls whether array files
/// are opened and checked against the metadata.
std::vector<std::string> check_dataset(Dataset& ds,
                                       const std::filesystem::path& dir,
                                       bool load_arrays) {
  std::vector<std::string> violations;
  std::set<std::string> subject_ids;
  for (auto& s : ds.subjects) {
    if (!subject_ids.insert(s.subject_id).second)
      violations.push_back("duplicate subject id '" + s.subject_id + "'");
    std::set<std::string> trial_ids;
    for (auto& t : s.trials) {
      const std::string where = s.subject_id + "/" + t.trial_id;
      if (!trial_ids.insert(t.trial_id).second)
        violations.push_back("duplicate trial id '" + where + "'");
      const std::string expected_attended =
          t.attended == Stream::kA ? t.stimulus_a : t.stimulus_b;
      if (t.attended_stimulus != expected_attended)
        violations.push_back("trial " + where + ": attended_stimulus '" +
                             t.attended_stimulus +
                             "' does not match attended stream's id '" +
                             expected_attended + "'");
      if (t.eeg_rate <= 0.0 || t.audio_rate <= 0.0)
        violations.push_back("trial " + where + ": non-positive sample rate");
      if (!load_arrays) continue;

      bool missing = false;
      for (const auto& [file, what] :
           {std::pair{t.eeg_file, "eeg"}, {t.env_a_file, "env_a"},
            {t.env_b_file, "env_b"}}) {
        if (!std::filesystem::exists(dir / file)) {
          violations.push_back("trial " + where + ": missing " + what +
                               " file '" + file + "'");
          missing = true;
        }
      }
      if (missing) continue;

      try {
        t.eeg = array_to_matrix(read_array(dir / t.eeg_file),
                                "trial " + where + " eeg");
        t.env_a = array_to_vector(read_array(dir / t.env_a_file),
                                  "trial " + where + " env_a");
        t.env_b = array_to_vector(read_array(dir / t.env_b_file),
                                  "trial " + where + " env_b");
      } catch (const Error& e) {
        violations.push_back(std::string("trial ") + where + ": " + e.what());
        continue;
      }
      if (!ds.channel_labels.empty() &&
          t.eeg.rows() != static_cast<Eigen::Index>(ds.channel_labels.size()))
        violations.push_back("trial " + where + ": eeg has " +
                             std::to_string(t.eeg.rows()) +
                             " channels, manifest lists " +
                             std::to_string(ds.channel_labels.size()));
      const double eeg_dur = static_cast<double>(t.eeg.cols()) / t.eeg_rate;
      const double env_dur =
          static_cast<double>(t.env_a.size()) / t.audio_rate;
      if (std::fabs(eeg_dur - t.duration_s) > 0.25 ||
          std::fabs(env_dur - t.duration_s) > 0.25)
        violations.push_back("trial " + where +
                             ": array lengths inconsistent with duration " +
                             std::to_string(t.duration_s) + " s");
      if (t.env_a.size() != t.env_b.size())
        violations.push_back("trial " + where +
                             ": env_a and env_b lengths differ");
    }
  }
  return violations;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Dataset out = ds;
  for (auto& s : out.subjects) {
    std::filesystem::create_directories(dir / s.subject_id);
    for (auto& t : s.trials) {
      if (t.eeg_file.empty())
        t.eeg_file = s.subject_id + "/" + t.trial_id + "_eeg.arr";
      if (t.env_a_file.empty())
        t.env_a_file = s.subject_id + "/" + t.trial_id + "_env_a.arr";
      if (t.env_b_file.empty())
        t.env_b_file = s.subject_id + "/" + t.trial_id + "_env_b.arr";
      write_array(dir / t.eeg_file, matrix_to_array(t.eeg));
      write_array(dir / t.env_a_file, vector_to_array(t.env_a));
      write_array(dir / t.env_b_file, vector_to_array(t.env_b));
    }
  }
  std::ofstream manifest(dir / "manifest.json", std::ios::trunc);
  if (!manifest) throw_io("save_dataset: cannot write manifest in ", dir);
  manifest << manifest_json(out).dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw_io("load_dataset: cannot open manifest in ", dir);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_io("load_dataset: malformed manifest in ", dir, ": ", e.what());
  }
  Dataset ds = manifest_from_json(j);
  auto violations = check_dataset(ds, dir, /*load_arrays=*/true);
  if (!violations.empty())
    throw_io("load_dataset: invalid dataset in ", dir, ": ", violations[0],
             violations.size() > 1
                 ? format_msg(" (and ", violations.size() - 1, " more)")
                 : "");
  return ds;
}

std::vector<std::string> validate_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw_io("validate_manifest: cannot open manifest in ", dir);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_io("validate_manifest: malformed manifest in ", dir, ": ",
             e.what());
  }
  try {
    Dataset ds = manifest_from_json(j);
    return check_dataset(ds, dir, /*load_arrays=*/true);
  } catch (const Error& e) {
    return {e.what()};
  }
}

Trial to_trial(const SubjectData& subject, const TrialRecord& rec) {
  if (rec.eeg_rate != rec.audio_rate)
    throw_value("to_trial: trial ", subject.subject_id, "/", rec.trial_id,
                " has eeg rate ", rec.eeg_rate, " != audio rate ",
                rec.audio_rate, "; preprocess the dataset first");
  Trial t;
  t.subject_id = subject.subject_id;
  t.trial_id = rec.trial_id;
  const Eigen::Index len =
      std::min(rec.eeg.cols(), std::min(rec.env_a.size(), rec.env_b.size()));
  t.eeg = rec.eeg.leftCols(len);
  t.env_a = rec.env_a.head(len);
  t.env_b = rec.env_b.head(len);
  t.attended = rec.attended;
  t.stimulus_a = rec.stimulus_a;
  t.stimulus_b = rec.stimulus_b;
  t.rate = rec.eeg_rate;
  return t;
}

void export_metadata_csv(const Dataset& ds,
                         const std::filesystem::path& path) {
  io::CsvWriter csv(path,
                    {"subject", "trial", "attended", "stimulus_a",
                     "stimulus_b", "eeg_rate", "audio_rate", "duration_s"});
  for (const auto& s : ds.subjects)
    for (const auto& t : s.trials)
      csv.row({s.subject_id, t.trial_id, stream_name(t.attended),
               t.stimulus_a, t.stimulus_b, io::CsvWriter::num(t.eeg_rate),
               io::CsvWriter::num(t.audio_rate),
               io::CsvWriter::num(t.duration_s)});
}

}  // namespace aad::data
