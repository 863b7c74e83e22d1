#pragma once

// Bag data model: instance bags, genomic profiles, survival records, the
// dataset manifest, bag file formats, synthetic data and time binning.

#include "motcat/core.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace motcat {

namespace fs = std::filesystem;

enum class Modality { pathology, genomic };

struct InstanceBag {
  Matrix features;  // instances x feature_dim
  Modality modality = Modality::pathology;
  std::string case_id;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }

  void validate() const {
    if (features.rows() < 1 || features.cols() < 1)
      throw DataError("bag '" + case_id + "' has empty shape " + shape_str(features.rows(), features.cols()));
    if (!features.allFinite()) throw DataError("bag '" + case_id + "' contains non-finite entries");
  }
};

struct GenomicCategory {
  std::string name;
  Vector attributes;
};

struct GenomicProfile {
  std::vector<GenomicCategory> categories;

  Index size() const { return static_cast<Index>(categories.size()); }

  void validate() const {
    if (categories.empty()) throw DataError("genomic profile has no categories");
    std::set<std::string> seen;
    for (const auto& c : categories) {
      if (!seen.insert(c.name).second) throw DataError("duplicate genomic category '" + c.name + "'");
      if (c.attributes.size() < 1) throw DataError("genomic category '" + c.name + "' has no attributes");
      if (!c.attributes.allFinite()) throw DataError("genomic category '" + c.name + "' has non-finite attributes");
    }
  }
};

struct SurvivalRecord {
  double time_months = 0.0;
  int censor = 0;  // 0 = event observed, 1 = right-censored
  int bin = -1;    // assigned by discretize_times

  bool uncensored() const { return censor == 0; }
};

struct CategorySpec {
  std::string name;
  int dim = 0;
};

struct CaseEntry {
  std::string case_id;
  std::string pathology_feature_path;
  std::string genomic_profile_path;
  double time_months = 0.0;
  int censor = 0;
};

struct CaseManifest {
  std::vector<CaseEntry> cases;
  int feature_dim = 0;
  std::vector<CategorySpec> category_spec;
};

enum class BagFormat { csv, binary };

inline BagFormat bag_format_from_path(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".csv") return BagFormat::csv;
  return BagFormat::binary;
}

namespace detail {

inline double parse_double(std::string_view tok, const std::string& where) {
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
  if (tok.empty()) throw FormatError("empty numeric field in " + where);
  double v = 0.0;
  const char* first = tok.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw FormatError("cannot parse '" + std::string(tok) + "' as a number in " + where);
  return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.9g", v);
  return buf.data();
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

template <typename Float>
void put_float(std::string& out, Float f) {
  using Bits = std::conditional_t<sizeof(Float) == 4, std::uint32_t, std::uint64_t>;
  Bits bits;
  std::memcpy(&bits, &f, sizeof(Float));
  for (std::size_t i = 0; i < sizeof(Float); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

template <typename Float>
Float get_float(const std::string& in, std::size_t offset) {
  using Bits = std::conditional_t<sizeof(Float) == 4, std::uint32_t, std::uint64_t>;
  Bits bits = 0;
  for (std::size_t i = 0; i < sizeof(Float); ++i)
    bits |= static_cast<Bits>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  Float f;
  std::memcpy(&f, &bits, sizeof(Float));
  return f;
}

// Shared by bag files ("FBAG", float32) and checkpoint tensors ("DBAG", float64).
template <typename Float>
std::string encode_matrix(const Matrix& m, const char (&magic)[5]) {
  std::string out(magic, 4);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  out.reserve(out.size() + sizeof(Float) * static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) put_float<Float>(out, static_cast<Float>(m(r, c)));
  return out;
}

template <typename Float>
Matrix decode_matrix(const std::string& bytes, const char (&magic)[5], const std::string& where) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), magic, 4) != 0)
    throw FormatError(where + ": missing '" + std::string(magic, 4) + "' header");
  const std::uint32_t rows = get_u32(bytes, 4);
  const std::uint32_t cols = get_u32(bytes, 8);
  const std::size_t expected = 12 + sizeof(Float) * static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != expected)
    throw FormatError(where + ": header declares " + shape_str(rows, cols) + " but payload has " +
                      std::to_string(bytes.size() - 12) + " bytes");
  Matrix m(rows, cols);
  std::size_t off = 12;
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c, off += sizeof(Float)) m(r, c) = static_cast<double>(get_float<Float>(bytes, off));
  return m;
}

}  // namespace detail

// CSV matrix writer used for bags and for couplings: header `<prefix>0,<prefix>1,...`.
inline std::string matrix_to_csv(const Matrix& m, const std::string& prefix = "f") {
  std::string out;
  for (Index c = 0; c < m.cols(); ++c) {
    if (c) out += ',';
    out += prefix + std::to_string(c);
  }
  out += '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += detail::format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

inline Matrix matrix_from_csv(const std::string& text, const std::string& where) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(where + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::size_t ncols = detail::split_csv_line(line).size();
  if (line.empty() || ncols == 0) throw FormatError(where + ": empty header");
  std::vector<double> values;
  Index nrows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto toks = detail::split_csv_line(line);
    if (toks.size() != ncols)
      throw FormatError(where + ": row " + std::to_string(nrows + 1) + " has " + std::to_string(toks.size()) +
                        " fields, expected " + std::to_string(ncols));
    for (const auto& t : toks) values.push_back(detail::parse_double(t, where));
    ++nrows;
  }
  Matrix m(nrows, static_cast<Index>(ncols));
  for (Index r = 0; r < nrows; ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = values[static_cast<std::size_t>(r) * ncols + c];
  return m;
}

inline void save_bag(const InstanceBag& bag, const fs::path& path, BagFormat format) {
  bag.validate();
  if (format == BagFormat::binary) {
    detail::write_file(path, detail::encode_matrix<float>(bag.features, "FBAG"));
  } else {
    detail::write_file(path, matrix_to_csv(bag.features));
  }
}

inline InstanceBag load_bag(const fs::path& path, BagFormat format, Modality modality = Modality::pathology,
                            std::string case_id = {}) {
  if (!fs::exists(path)) throw IoError("bag file '" + path.string() + "' does not exist");
  const std::string bytes = detail::read_file(path);
  InstanceBag bag;
  bag.modality = modality;
  bag.case_id = case_id.empty() ? path.stem().string() : std::move(case_id);
  bag.features = format == BagFormat::binary ? detail::decode_matrix<float>(bytes, "FBAG", path.string())
                                             : matrix_from_csv(bytes, path.string());
  bag.validate();
  return bag;
}

// One row per category: `name,v0,v1,...`; row lengths may differ.
inline void save_genomic_profile(const GenomicProfile& profile, const fs::path& path) {
  profile.validate();
  std::string out = "category,attributes\n";
  for (const auto& c : profile.categories) {
    out += c.name;
    for (Index i = 0; i < c.attributes.size(); ++i) out += "," + detail::format_double(c.attributes[i]);
    out += '\n';
  }
  detail::write_file(path, out);
}

inline GenomicProfile load_genomic_profile(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("genomic profile '" + path.string() + "' does not exist");
  std::istringstream in(detail::read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("category", 0) != 0)
    throw FormatError(path.string() + ": missing 'category' header");
  GenomicProfile profile;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto toks = detail::split_csv_line(line);
    if (toks.size() < 2) throw FormatError(path.string() + ": category row without attributes");
    GenomicCategory cat;
    cat.name = std::string(toks[0]);
    cat.attributes.resize(static_cast<Index>(toks.size() - 1));
    for (std::size_t i = 1; i < toks.size(); ++i) cat.attributes[static_cast<Index>(i - 1)] = detail::parse_double(toks[i], path.string());
    profile.categories.push_back(std::move(cat));
  }
  profile.validate();
  return profile;
}

// ---- manifest --------------------------------------------------------------

inline nlohmann::json manifest_to_json(const CaseManifest& m) {
  nlohmann::json j;
  j["cases"] = nlohmann::json::array();
  for (const auto& c : m.cases) {
    j["cases"].push_back({{"case_id", c.case_id},
                          {"pathology_feature_path", c.pathology_feature_path},
                          {"genomic_profile_path", c.genomic_profile_path},
                          {"time_months", c.time_months},
                          {"censor", c.censor}});
  }
  j["feature_dim"] = m.feature_dim;
  j["category_spec"] = nlohmann::json::array();
  for (const auto& s : m.category_spec) j["category_spec"].push_back({{"name", s.name}, {"dim", s.dim}});
  return j;
}

inline CaseManifest manifest_from_json(const nlohmann::json& j) {
  CaseManifest m;
  try {
    for (const auto& c : j.at("cases")) {
      CaseEntry e;
      e.case_id = c.at("case_id").get<std::string>();
      e.pathology_feature_path = c.at("pathology_feature_path").get<std::string>();
      e.genomic_profile_path = c.at("genomic_profile_path").get<std::string>();
      e.time_months = c.at("time_months").get<double>();
      e.censor = c.at("censor").get<int>();
      m.cases.push_back(std::move(e));
    }
    m.feature_dim = j.at("feature_dim").get<int>();
    for (const auto& s : j.at("category_spec")) m.category_spec.push_back({s.at("name").get<std::string>(), s.at("dim").get<int>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  std::set<std::string> ids;
  for (const auto& c : m.cases) {
    if (!ids.insert(c.case_id).second) throw DataError("manifest: duplicate case_id '" + c.case_id + "'");
    if (!(c.time_months >= 0.0)) throw DataError("manifest: case '" + c.case_id + "' has negative time");
    if (c.censor != 0 && c.censor != 1) throw DataError("manifest: case '" + c.case_id + "' censor must be 0 or 1");
  }
  if (m.feature_dim < 1) throw DataError("manifest: feature_dim must be >= 1");
  return m;
}

inline void save_manifest(const CaseManifest& m, const fs::path& path) {
  detail::write_file(path, manifest_to_json(m).dump(2) + "\n");
}

inline CaseManifest load_manifest(const fs::path& path) {
  const std::string text = detail::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

// A fully loaded case; paths in the manifest are relative to its directory.
struct CaseData {
  std::string case_id;
  InstanceBag pathology;
  GenomicProfile genomic;
  SurvivalRecord record;
};

inline std::vector<CaseData> load_cases(const CaseManifest& m, const fs::path& manifest_dir) {
  std::vector<CaseData> out;
  out.reserve(m.cases.size());
  for (const auto& c : m.cases) {
    CaseData cd;
    cd.case_id = c.case_id;
    const fs::path ppath = manifest_dir / c.pathology_feature_path;
    cd.pathology = load_bag(ppath, bag_format_from_path(ppath), Modality::pathology, c.case_id);
    if (cd.pathology.dim() != m.feature_dim)
      throw DataError("case '" + c.case_id + "': pathology dim " + std::to_string(cd.pathology.dim()) +
                      " != feature_dim " + std::to_string(m.feature_dim));
    cd.genomic = load_genomic_profile(manifest_dir / c.genomic_profile_path);
    if (!m.category_spec.empty()) {
      if (cd.genomic.size() != static_cast<Index>(m.category_spec.size()))
        throw DataError("case '" + c.case_id + "': genomic category count mismatch");
      for (std::size_t j = 0; j < m.category_spec.size(); ++j) {
        const auto& cat = cd.genomic.categories[j];
        if (cat.name != m.category_spec[j].name || cat.attributes.size() != m.category_spec[j].dim)
          throw DataError("case '" + c.case_id + "': category '" + cat.name + "' does not match category_spec");
      }
    }
    cd.record.time_months = c.time_months;
    cd.record.censor = c.censor;
    out.push_back(std::move(cd));
  }
  return out;
}

// ---- time discretization ---------------------------------------------------

struct Discretization {
  std::vector<double> edges;  // interior edges, strictly increasing after dedup
  std::vector<SurvivalRecord> records;
  bool degenerate_edges = false;
};

// Linear-interpolated quantile of sorted data (position q*(n-1)).
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Bin k covers (edges[k-1], edges[k]]; the first bin starts at -inf and the
// last is open to +inf.
inline int assign_bin(const std::vector<double>& edges, double time) {
  return static_cast<int>(std::lower_bound(edges.begin(), edges.end(), time) - edges.begin());
}

inline Discretization discretize_times(std::vector<SurvivalRecord> records, int n_bins) {
  if (n_bins < 2) throw ParameterError("n_bins must be >= 2");
  std::vector<double> times;
  for (const auto& r : records) {
    if (!(r.time_months >= 0.0)) throw DataError("negative or non-finite survival time");
    if (r.uncensored()) times.push_back(r.time_months);
  }
  if (times.size() < static_cast<std::size_t>(n_bins))
    throw DataError("need at least " + std::to_string(n_bins) + " uncensored cases, got " + std::to_string(times.size()));
  std::sort(times.begin(), times.end());
  Discretization out;
  for (int k = 1; k < n_bins; ++k) out.edges.push_back(sorted_quantile(times, static_cast<double>(k) / n_bins));
  const auto before = out.edges.size();
  out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
  out.degenerate_edges = out.edges.size() != before;
  for (auto& r : records) r.bin = assign_bin(out.edges, r.time_months);
  out.records = std::move(records);
  return out;
}

// ---- synthetic data --------------------------------------------------------

struct SyntheticSpec {
  int n_cases = 50;
  int n_pathology = 300;  // M_p
  int n_genomic = 6;      // M_g
  int feature_dim = 16;   // d
  double signal_fraction = 0.5;
  double noise_scale = 0.3;
  double censor_rate = 0.3;
  std::uint64_t seed = 7;

  void validate() const {
    if (n_cases < 10) throw ParameterError("n_cases must be >= 10");
    if (n_genomic < 2 || n_pathology < n_genomic) throw ParameterError("require M_p >= M_g >= 2");
    if (feature_dim < 1) throw ParameterError("feature_dim must be >= 1");
    if (!(signal_fraction > 0.0 && signal_fraction < 1.0)) throw ParameterError("signal_fraction must lie in (0,1)");
    if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) throw ParameterError("noise_scale must be >= 0");
    if (!(censor_rate >= 0.0 && censor_rate < 1.0)) throw ParameterError("censor_rate must lie in [0,1)");
  }
};

struct SyntheticDataset {
  CaseManifest manifest;
  fs::path manifest_path;
  std::vector<double> latent_risk;
  std::vector<double> event_time;  // before censoring
  std::vector<Matrix> prototypes;   // per case, M_g x d
};

inline const std::vector<std::string>& default_category_names() {
  static const std::vector<std::string> names = {"tumor_suppression", "oncogenesis",  "protein_kinases",
                                                 "cellular_differentiation", "transcription", "cytokines_growth"};
  return names;
}

inline std::string category_name(int j) {
  const auto& names = default_category_names();
  if (j < static_cast<int>(names.size())) return names[static_cast<std::size_t>(j)];
  return "category_" + std::to_string(j);
}

// Planted structure: every case has a latent risk r ~ N(0,1). Category j owns
// two fixed orthonormal directions v_j, u_j; its prototype is 2 v_j + 1.5 r u_j,
// so the risk signal is a signed offset rather than a growing magnitude.
// Genomic attributes are a fixed random map of the prototype, pathology
// signal instances sit near prototypes, the remaining instances are
// background noise, and event time is 60*exp(-r + noise) months.
inline SyntheticDataset generate_synthetic_dataset(const SyntheticSpec& spec, const fs::path& out_dir) {
  spec.validate();
  const int d = spec.feature_dim;
  const int mg = spec.n_genomic;

  Rng structure(mix_seed(spec.seed, 1));
  std::vector<Vector> directions;
  std::vector<Vector> anchors;
  std::vector<Matrix> genomic_maps;
  std::vector<CategorySpec> cats;
  for (int j = 0; j < mg; ++j) {
    Vector u(d);
    for (int k = 0; k < d; ++k) u[k] = structure.normal();
    u /= u.norm();
    Vector v(d);
    for (int k = 0; k < d; ++k) v[k] = structure.normal();
    v -= v.dot(u) * u;
    v /= v.norm();
    directions.push_back(u);
    anchors.push_back(v);
    const int dj = 4 + 2 * (j % 3);
    Matrix g(dj, d);
    for (Index r = 0; r < g.rows(); ++r)
      for (Index c = 0; c < g.cols(); ++c) g(r, c) = structure.normal() / std::sqrt(static_cast<double>(d));
    genomic_maps.push_back(std::move(g));
    cats.push_back({category_name(j), dj});
  }

  SyntheticDataset ds;
  ds.manifest.feature_dim = d;
  ds.manifest.category_spec = cats;
  const int n_signal = static_cast<int>(std::ceil(spec.signal_fraction * spec.n_pathology));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  for (int i = 0; i < spec.n_cases; ++i) {
    Rng rng(mix_seed(spec.seed, 1000 + static_cast<std::uint64_t>(i)));
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "case_%04d", i);
    const std::string id = idbuf;

    const double risk = rng.normal();
    std::vector<Vector> prototypes;
    for (int j = 0; j < mg; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      prototypes.push_back(2.0 * anchors[ju] + 1.5 * risk * directions[ju]);
    }

    GenomicProfile profile;
    for (int j = 0; j < mg; ++j) {
      Vector x = genomic_maps[static_cast<std::size_t>(j)] * prototypes[static_cast<std::size_t>(j)];
      for (Index k = 0; k < x.size(); ++k) x[k] += spec.noise_scale * rng.normal();
      profile.categories.push_back({cats[static_cast<std::size_t>(j)].name, std::move(x)});
    }

    InstanceBag bag;
    bag.case_id = id;
    bag.features.resize(spec.n_pathology, d);
    for (int k = 0; k < spec.n_pathology; ++k) {
      if (k < n_signal) {
        const auto& p = prototypes[static_cast<std::size_t>(k % mg)];
        for (int c = 0; c < d; ++c) bag.features(k, c) = p[c] + spec.noise_scale * inv_sqrt_d * rng.normal();
      } else {
        for (int c = 0; c < d; ++c) bag.features(k, c) = inv_sqrt_d * rng.normal();
      }
    }
    std::vector<int> order(static_cast<std::size_t>(spec.n_pathology));
    for (int k = 0; k < spec.n_pathology; ++k) order[static_cast<std::size_t>(k)] = k;
    rng.shuffle(order);
    Matrix shuffled(bag.features.rows(), d);
    for (int k = 0; k < spec.n_pathology; ++k) shuffled.row(k) = bag.features.row(order[static_cast<std::size_t>(k)]);
    bag.features = std::move(shuffled);

    const double event_time = 60.0 * std::exp(-risk + spec.noise_scale * rng.normal());
    const bool censored = rng.bernoulli(spec.censor_rate);
    const double observed = censored ? event_time * rng.uniform_open() : event_time;

    const std::string bag_rel = "bags/" + id + ".fbag";
    const std::string gen_rel = "genomic/" + id + ".csv";
    save_bag(bag, out_dir / bag_rel, BagFormat::binary);
    save_genomic_profile(profile, out_dir / gen_rel);

    ds.manifest.cases.push_back({id, bag_rel, gen_rel, observed, censored ? 1 : 0});
    ds.latent_risk.push_back(risk);
    ds.event_time.push_back(event_time);
    Matrix protos(mg, d);
    for (int j = 0; j < mg; ++j) protos.row(j) = prototypes[static_cast<std::size_t>(j)].transpose();
    ds.prototypes.push_back(std::move(protos));
  }
  ds.manifest_path = out_dir / "manifest.json";
  save_manifest(ds.manifest, ds.manifest_path);
  return ds;
}

}  // namespace motcat
