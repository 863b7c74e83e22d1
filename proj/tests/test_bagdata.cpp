#include "motcat/bagdata.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cstring>

#include <cmath>
#include <fstream>
#include <map>

using namespace motcat;
using testing_support::ScratchDir;

namespace {

void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << s;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = detail::read_file(e.path());
  return out;
}

// Type-7 quantile written independently of the library.
double quantile7(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace

TEST(LoadBag, CsvZerosRoundTrip) {
  ScratchDir dir("bag_csv");
  write_text(dir / "z.csv", "f0,f1,f2\n0,0,0\n0,0,0\n");
  const auto bag = load_bag(dir / "z.csv", BagFormat::csv);
  EXPECT_EQ(bag.size(), 2);
  EXPECT_EQ(bag.dim(), 3);
  EXPECT_TRUE((bag.features.array() == 0.0).all());
}

TEST(LoadBag, BinaryRoundTripIsBitIdentical) {
  ScratchDir dir("bag_bin");
  Rng rng(3);
  InstanceBag bag;
  bag.features = testing_support::random_normal(rng, 7, 5);
  for (Index k = 0; k < bag.features.size(); ++k)
    bag.features.data()[k] = static_cast<double>(static_cast<float>(bag.features.data()[k]));
  save_bag(bag, dir / "b.fbag", BagFormat::binary);
  const auto back = load_bag(dir / "b.fbag", BagFormat::binary);
  ASSERT_EQ(back.features.rows(), 7);
  ASSERT_EQ(back.features.cols(), 5);
  EXPECT_EQ(std::memcmp(back.features.data(), bag.features.data(), sizeof(double) * 35), 0);
}

TEST(LoadBag, BinaryHeaderLayout) {
  ScratchDir dir("bag_layout");
  InstanceBag bag;
  bag.features = Matrix::Constant(2, 3, 1.5);
  save_bag(bag, dir / "b.fbag", BagFormat::binary);
  const std::string bytes = detail::read_file(dir / "b.fbag");
  ASSERT_EQ(bytes.size(), 4u + 8u + 6u * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "FBAG");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);
  float f;
  std::memcpy(&f, bytes.data() + 12, 4);
  EXPECT_EQ(f, 1.5f);
}

TEST(LoadBag, CsvRaggedRowsIsFormatError) {
  ScratchDir dir("bag_ragged");
  write_text(dir / "r.csv", "f0,f1,f2\n1,2,3\n1,2,3,4\n");
  EXPECT_THROW(load_bag(dir / "r.csv", BagFormat::csv), FormatError);
}

TEST(LoadBag, NonFiniteIsDataError) {
  ScratchDir dir("bag_nan");
  write_text(dir / "n.csv", "f0,f1\n1,nan\n");
  EXPECT_THROW(load_bag(dir / "n.csv", BagFormat::csv), DataError);
  write_text(dir / "i.csv", "f0,f1\n1,inf\n");
  EXPECT_THROW(load_bag(dir / "i.csv", BagFormat::csv), DataError);
}

TEST(LoadBag, MalformedBinaryIsFormatError) {
  ScratchDir dir("bag_badbin");
  write_text(dir / "magic.fbag", std::string("XBAG\x01\0\0\0\x01\0\0\0\0\0\0\0", 16));
  EXPECT_THROW(load_bag(dir / "magic.fbag", BagFormat::binary), FormatError);
  write_text(dir / "short.fbag", std::string("FBAG\x02\0\0\0\x02\0\0\0\0\0\0\0", 16));
  EXPECT_THROW(load_bag(dir / "short.fbag", BagFormat::binary), FormatError);
  write_text(dir / "tiny.fbag", "FBA");
  EXPECT_THROW(load_bag(dir / "tiny.fbag", BagFormat::binary), FormatError);
}

TEST(LoadBag, MissingFileIsIoError) {
  EXPECT_THROW(load_bag("/nonexistent/motcat/x.csv", BagFormat::csv), IoError);
}

TEST(LoadBag, CsvRoundTripWithinNineDigits) {
  ScratchDir dir("bag_csvrt");
  Rng rng(11);
  InstanceBag bag;
  bag.features = testing_support::random_normal(rng, 20, 6, 100.0);
  save_bag(bag, dir / "c.csv", BagFormat::csv);
  const auto back = load_bag(dir / "c.csv", BagFormat::csv);
  for (Index i = 0; i < bag.features.size(); ++i)
    EXPECT_LE(std::abs(back.features.data()[i] - bag.features.data()[i]), 1e-6 * std::abs(bag.features.data()[i]));
}

TEST(GenomicProfile, RoundTripWithVaryingLengths) {
  ScratchDir dir("genomic");
  GenomicProfile p;
  p.categories.push_back({"a", Vector::LinSpaced(3, 0.0, 1.0)});
  p.categories.push_back({"b", Vector::LinSpaced(5, -2.0, 2.0)});
  save_genomic_profile(p, dir / "g.csv");
  const auto back = load_genomic_profile(dir / "g.csv");
  ASSERT_EQ(back.size(), 2);
  EXPECT_EQ(back.categories[1].name, "b");
  EXPECT_EQ(back.categories[1].attributes.size(), 5);
  EXPECT_NEAR(back.categories[1].attributes[4], 2.0, 1e-12);
}

TEST(GenomicProfile, DuplicateNamesRejected) {
  GenomicProfile p;
  p.categories.push_back({"a", Vector::Ones(2)});
  p.categories.push_back({"a", Vector::Ones(2)});
  EXPECT_THROW(p.validate(), DataError);
}

TEST(Manifest, JsonRoundTripAndValidation) {
  CaseManifest m;
  m.feature_dim = 4;
  m.category_spec = {{"x", 2}, {"y", 3}};
  m.cases.push_back({"c1", "bags/c1.fbag", "genomic/c1.csv", 12.5, 0});
  m.cases.push_back({"c2", "bags/c2.fbag", "genomic/c2.csv", 3.0, 1});
  const auto back = manifest_from_json(manifest_to_json(m));
  ASSERT_EQ(back.cases.size(), 2u);
  EXPECT_EQ(back.cases[1].case_id, "c2");
  EXPECT_EQ(back.cases[1].censor, 1);
  EXPECT_EQ(back.category_spec[1].dim, 3);

  auto dup = m;
  dup.cases[1].case_id = "c1";
  EXPECT_THROW(manifest_from_json(manifest_to_json(dup)), DataError);
  auto neg = m;
  neg.cases[0].time_months = -1.0;
  EXPECT_THROW(manifest_from_json(manifest_to_json(neg)), DataError);
  auto bad = m;
  bad.cases[0].censor = 2;
  EXPECT_THROW(manifest_from_json(manifest_to_json(bad)), DataError);
}

TEST(Discretize, MedianEdgeForTwoBins) {
  std::vector<SurvivalRecord> r = {{1, 0}, {2, 0}, {3, 0}, {4, 0}};
  const auto d = discretize_times(r, 2);
  ASSERT_EQ(d.edges.size(), 1u);
  EXPECT_DOUBLE_EQ(d.edges[0], 2.5);
  EXPECT_EQ(d.records[0].bin, 0);
  EXPECT_EQ(d.records[1].bin, 0);
  EXPECT_EQ(d.records[2].bin, 1);
  EXPECT_EQ(d.records[3].bin, 1);
  EXPECT_FALSE(d.degenerate_edges);
}

TEST(Discretize, AllEqualTimesCollapseToOneEdge) {
  std::vector<SurvivalRecord> r(6, SurvivalRecord{5.0, 0});
  const auto d = discretize_times(r, 4);
  EXPECT_EQ(d.edges.size(), 1u);
  EXPECT_TRUE(d.degenerate_edges);
  for (const auto& x : d.records) EXPECT_EQ(x.bin, 0);
}

TEST(Discretize, MixedCensoringMatchesQuantileOracle) {
  Rng rng(21);
  std::vector<SurvivalRecord> r;
  std::vector<double> events;
  for (int i = 0; i < 20; ++i) {
    const double t = 1.0 + 99.0 * rng.uniform();
    const int c = i % 3 == 0 ? 1 : 0;
    r.push_back({t, c});
    if (c == 0) events.push_back(t);
  }
  const auto d = discretize_times(r, 4);
  ASSERT_EQ(d.edges.size(), 3u);
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(d.edges[static_cast<std::size_t>(k - 1)], quantile7(events, k / 4.0), 1e-12);
  for (std::size_t i = 0; i < r.size(); ++i) {
    int expect = 0;
    for (double e : d.edges) expect += r[i].time_months > e ? 1 : 0;
    EXPECT_EQ(d.records[i].bin, expect);
  }
}

TEST(Discretize, BinsNonDecreasingInTime) {
  Rng rng(5);
  std::vector<SurvivalRecord> r;
  for (int i = 0; i < 50; ++i) r.push_back({100.0 * rng.uniform(), static_cast<int>(rng.below(2))});
  r.push_back({1.0, 0});
  r.push_back({2.0, 0});
  r.push_back({3.0, 0});
  r.push_back({4.0, 0});
  auto d = discretize_times(r, 4);
  std::sort(d.records.begin(), d.records.end(), [](auto& a, auto& b) { return a.time_months < b.time_months; });
  for (std::size_t i = 1; i < d.records.size(); ++i) EXPECT_LE(d.records[i - 1].bin, d.records[i].bin);
}

TEST(Discretize, Errors) {
  std::vector<SurvivalRecord> r = {{1, 0}, {2, 1}, {3, 1}};
  EXPECT_THROW(discretize_times(r, 2), DataError);
  EXPECT_THROW(discretize_times(r, 1), ParameterError);
}

TEST(Synthetic, SameSeedGivesIdenticalTrees) {
  ScratchDir a("synth_a"), b("synth_b");
  SyntheticSpec spec;
  spec.n_cases = 50;
  spec.n_pathology = 40;
  spec.seed = 7;
  generate_synthetic_dataset(spec, a.path());
  generate_synthetic_dataset(spec, b.path());
  const auto ta = tree_contents(a.path()), tb = tree_contents(b.path());
  EXPECT_EQ(ta.size(), 101u);
  EXPECT_TRUE(ta == tb);
}

TEST(Synthetic, ZeroNoiseSignalInstancesEqualPrototypes) {
  ScratchDir dir("synth_zero");
  SyntheticSpec spec;
  spec.n_cases = 10;
  spec.n_pathology = 30;
  spec.signal_fraction = 0.5;
  spec.noise_scale = 0.0;
  const auto ds = generate_synthetic_dataset(spec, dir.path());
  const auto cases = load_cases(ds.manifest, dir.path());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Matrix protos = ds.prototypes[i].unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
    int matched = 0;
    for (Index r = 0; r < cases[i].pathology.features.rows(); ++r)
      for (Index j = 0; j < protos.rows(); ++j)
        if (cases[i].pathology.features.row(r) == protos.row(j)) {
          ++matched;
          break;
        }
    EXPECT_EQ(matched, 15);
  }
}

TEST(Synthetic, CensorFractionWithinBinomialInterval) {
  ScratchDir dir("synth_censor");
  SyntheticSpec spec;
  spec.n_cases = 200;
  spec.n_pathology = 8;
  spec.censor_rate = 0.3;
  const auto ds = generate_synthetic_dataset(spec, dir.path());
  int censored = 0;
  for (const auto& c : ds.manifest.cases) censored += c.censor;
  const double frac = censored / 200.0;
  EXPECT_GE(frac, 0.22);
  EXPECT_LE(frac, 0.38);
}

TEST(Synthetic, ZeroNoiseEventTimeIsMonotoneInRisk) {
  ScratchDir dir("synth_mono");
  SyntheticSpec spec;
  spec.n_cases = 120;
  spec.n_pathology = 8;
  spec.noise_scale = 0.0;
  const auto ds = generate_synthetic_dataset(spec, dir.path());
  EXPECT_DOUBLE_EQ(spearman(ds.latent_risk, ds.event_time), -1.0);
}

TEST(Synthetic, CensoredTimesLieBelowEventTimes) {
  ScratchDir dir("synth_trunc");
  SyntheticSpec spec;
  spec.n_cases = 60;
  spec.n_pathology = 8;
  const auto ds = generate_synthetic_dataset(spec, dir.path());
  for (std::size_t i = 0; i < ds.manifest.cases.size(); ++i) {
    const auto& c = ds.manifest.cases[i];
    if (c.censor) {
      EXPECT_LT(c.time_months, ds.event_time[i]);
      EXPECT_GT(c.time_months, 0.0);
    } else {
      EXPECT_EQ(c.time_months, ds.event_time[i]);
    }
  }
}

TEST(Synthetic, InvalidSpecIsParameterError) {
  ScratchDir dir("synth_bad");
  SyntheticSpec spec;
  spec.signal_fraction = 1.0;
  EXPECT_THROW(generate_synthetic_dataset(spec, dir.path()), ParameterError);
  spec = {};
  spec.censor_rate = 1.0;
  EXPECT_THROW(generate_synthetic_dataset(spec, dir.path()), ParameterError);
  spec = {};
  spec.n_genomic = 10;
  spec.n_pathology = 5;
  EXPECT_THROW(generate_synthetic_dataset(spec, dir.path()), ParameterError);
}

TEST(Synthetic, LoadedCasesMatchManifestShapes) {
  ScratchDir dir("synth_load");
  SyntheticSpec spec;
  spec.n_cases = 12;
  spec.n_pathology = 20;
  const auto ds = generate_synthetic_dataset(spec, dir.path());
  const auto m = load_manifest(ds.manifest_path);
  const auto cases = load_cases(m, dir.path());
  ASSERT_EQ(cases.size(), 12u);
  EXPECT_EQ(cases[0].pathology.size(), 20);
  EXPECT_EQ(cases[0].pathology.dim(), spec.feature_dim);
  EXPECT_EQ(cases[0].genomic.size(), spec.n_genomic);
  EXPECT_EQ(cases[0].genomic.categories[0].name, "tumor_suppression");
}
