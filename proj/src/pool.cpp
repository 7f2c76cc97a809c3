#include "handseg/pool.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "handseg/error.hpp"
#include "handseg/kernels.hpp"

namespace handseg {

ModelPool::ModelPool(std::vector<IlluminationModel> models)
    : models_(std::move(models)) {
  if (models_.empty()) throw DataError("model pool is empty");
  const std::size_t len = models_.front().global_feature.bins.size();
  for (const auto& m : models_) {
    if (m.global_feature.bins.size() != len ||
        !(m.global_feature.config == models_.front().global_feature.config))
      throw DataError("pool models use different histogram layouts");
  }
}

std::vector<std::size_t> ModelPool::recommend(const GlobalFeature& gf,
                                              std::size_t k) const {
  if (k < 1) throw ParamError("k must be >= 1");
  if (k > models_.size()) throw ParamError("k exceeds pool size");
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(models_.size());
  for (std::size_t i = 0; i < models_.size(); ++i)
    d.emplace_back(feature_distance(gf, models_[i].global_feature), i);
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k),
                    d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

std::vector<PixelSample> sample_pixels(const Frame& frame,
                                       const BinaryMask& mask,
                                       std::size_t samples_per_class,
                                       std::uint64_t seed) {
  if (!mask.same_shape(frame.width(), frame.height()))
    throw DataError("mask dimensions do not match frame");
  std::vector<std::uint32_t> skin, background;
  for (std::size_t i = 0; i < mask.size(); ++i)
    (mask[i] ? skin : background).push_back(static_cast<std::uint32_t>(i));

  std::mt19937_64 rng(seed);
  const auto cap = [&](std::vector<std::uint32_t>& v) {
    if (samples_per_class == 0 || v.size() <= samples_per_class) return;
    for (std::size_t i = 0; i < samples_per_class; ++i)
      std::swap(v[i], v[i + rng() % (v.size() - i)]);
    v.resize(samples_per_class);
    std::sort(v.begin(), v.end());
  };
  cap(skin);
  cap(background);

  std::vector<PixelSample> out;
  out.reserve(skin.size() + background.size());
  // Merge back into raster order.
  std::size_t a = 0, b = 0;
  while (a < skin.size() || b < background.size()) {
    const bool take_skin =
        b == background.size() || (a < skin.size() && skin[a] < background[b]);
    const std::uint32_t i = take_skin ? skin[a++] : background[b++];
    out.push_back({rgb_to_lab(frame.at(i)), take_skin});
  }
  return out;
}

ModelPool build_pool(const std::vector<TrainingPair>& pairs,
                     const PoolParams& params, BuildReport* report) {
  if (pairs.empty()) throw DataError("no training pairs");
  params.forest.validate();
  std::vector<IlluminationModel> models;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const TrainingPair& p = pairs[i];
    if (!p.mask.same_shape(p.frame.width(), p.frame.height()))
      throw DataError("mask dimensions do not match frame: " + p.source_id);
    const std::int64_t positives = count_nonzero(p.mask);
    if (positives == 0 || positives == static_cast<std::int64_t>(p.mask.size())) {
      std::clog << "warning: skipping single-class mask " << p.source_id
                << '\n';
      if (report) report->skipped.push_back(p.source_id);
      continue;
    }
    ForestParams fp = params.forest;
    fp.seed = params.forest.seed + i;
    const auto samples =
        sample_pixels(p.frame, p.mask, params.samples_per_class, fp.seed);
    models.push_back({train_forest(samples, fp),
                      hsv_histogram(p.frame, params.bins), p.source_id});
  }
  if (models.empty()) throw DataError("all training pairs were skipped");
  return ModelPool(std::move(models));
}

std::vector<double> fusion_weights(double lambda, std::size_t k) {
  std::vector<double> w(k);
  double v = 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    v *= lambda;
    w[j] = v;
  }
  return w;
}

ProbabilityMap fuse(std::span<const ProbabilityMap> maps, double lambda) {
  if (maps.empty()) throw ParamError("fuse needs at least one map");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ParamError("lambda must be in (0, 1)");
  const int w = maps.front().width(), h = maps.front().height();
  for (const auto& m : maps)
    if (!m.same_shape(w, h)) throw DataError("probability map size mismatch");

  const auto& k = kernels::active_kernels();
  const std::vector<double> weights = fusion_weights(lambda, maps.size());
  ProbabilityMap out(w, h, 0.0);
  double norm = 0.0;
  for (std::size_t j = 0; j < maps.size(); ++j) {
    k.weighted_accumulate(out.storage().data(), maps[j].storage().data(),
                          weights[j], out.size());
    norm += weights[j];
  }
  k.divide(out.storage().data(), norm, out.size());
  return out;
}

BinaryMask binarize(const ProbabilityMap& map, double threshold) {
  BinaryMask out(map.width(), map.height());
  kernels::active_kernels().threshold(map.storage().data(), threshold,
                                      out.storage().data(), map.size());
  return out;
}

BinaryMask segment(const ModelPool& pool, const Frame& frame,
                   const LabImage& lab, const SegmentParams& params) {
  if (!(params.threshold > 0.0 && params.threshold < 1.0))
    throw ParamError("threshold must be in (0, 1)");
  const GlobalFeature gf = hsv_histogram(frame, pool.bins());
  const std::vector<std::size_t> picks = pool.recommend(gf, std::min(params.k, pool.size()));
  std::vector<ProbabilityMap> maps;
  maps.reserve(picks.size());
  for (std::size_t i : picks)
    maps.push_back(predict_map(pool.model(i).forest, lab));
  return binarize(fuse(maps, params.lambda), params.threshold);
}

BinaryMask segment(const ModelPool& pool, const Frame& frame,
                   const SegmentParams& params) {
  return segment(pool, frame, to_lab(frame), params);
}

// --- container format -------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'H', 'S', 'P', 'O', 'O', 'L', '\0', '\0'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void u32(std::uint32_t v) { le(v, 4); }
  void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v), 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  void le(std::uint64_t v, int bytes) {
    char buf[8];
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(buf, bytes);
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str() {
    const std::uint32_t n = count(1u << 20);
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  // Element count with a sanity bound so corrupt files fail fast.
  std::uint32_t count(std::uint32_t limit) {
    const std::uint32_t n = u32();
    if (n > limit) throw DataError("pool file is corrupt (implausible count)");
    return n;
  }
  void read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw DataError("pool file is truncated");
  }

 private:
  std::uint64_t le(int bytes) {
    unsigned char buf[8];
    read(reinterpret_cast<char*>(buf), static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::istream& in_;
};

}  // namespace

void save_pool(const ModelPool& pool, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  Writer w(out);
  w.u32(kPoolFormatVersion);
  const BinConfig& bins = pool.bins();
  w.u32(static_cast<std::uint32_t>(bins.h_bins));
  w.u32(static_cast<std::uint32_t>(bins.s_bins));
  w.u32(static_cast<std::uint32_t>(bins.v_bins));
  w.u32(static_cast<std::uint32_t>(pool.size()));
  for (const IlluminationModel& m : pool.models()) {
    w.str(m.source_id);
    w.u32(static_cast<std::uint32_t>(m.global_feature.bins.size()));
    for (double v : m.global_feature.bins) w.f64(v);
    const ForestParams& p = m.forest.params();
    w.i32(p.n_trees);
    w.i32(p.max_depth);
    w.i32(p.min_leaf_samples);
    w.f64(p.bootstrap_fraction);
    w.i32(p.features_per_split);
    w.u64(p.seed);
    w.u32(static_cast<std::uint32_t>(m.forest.trees().size()));
    for (const DecisionTree& t : m.forest.trees()) {
      w.u32(static_cast<std::uint32_t>(t.nodes.size()));
      for (const TreeNode& n : t.nodes) {
        w.i32(n.feature);
        w.f64(n.threshold);
        w.i32(n.left);
        w.i32(n.right);
        w.f64(n.probability);
      }
    }
  }
  if (!out) throw DataError("failed writing pool");
}

ModelPool load_pool(std::istream& in) {
  char magic[8];
  Reader r(in);
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError("not a model pool file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kPoolFormatVersion)
    throw DataError("unsupported pool format version " +
                    std::to_string(version));
  BinConfig bins;
  bins.h_bins = static_cast<int>(r.count(4096));
  bins.s_bins = static_cast<int>(r.count(4096));
  bins.v_bins = static_cast<int>(r.count(4096));
  const std::uint32_t n_models = r.count(1u << 16);
  std::vector<IlluminationModel> models;
  for (std::uint32_t mi = 0; mi < n_models; ++mi) {
    IlluminationModel m;
    m.source_id = r.str();
    m.global_feature.config = bins;
    m.global_feature.bins.resize(r.count(1u << 24));
    if (m.global_feature.bins.size() != static_cast<std::size_t>(bins.total()))
      throw DataError("pool file is corrupt (histogram length)");
    for (double& v : m.global_feature.bins) v = r.f64();
    ForestParams p;
    p.n_trees = r.i32();
    p.max_depth = r.i32();
    p.min_leaf_samples = r.i32();
    p.bootstrap_fraction = r.f64();
    p.features_per_split = r.i32();
    p.seed = r.u64();
    std::vector<DecisionTree> trees(r.count(1u << 16));
    for (DecisionTree& t : trees) {
      t.nodes.resize(r.count(1u << 26));
      for (TreeNode& n : t.nodes) {
        n.feature = r.i32();
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        n.probability = r.f64();
      }
      const auto size = static_cast<std::int32_t>(t.nodes.size());
      if (size == 0) throw DataError("pool file is corrupt (empty tree)");
      for (std::int32_t i = 0; i < size; ++i) {
        const TreeNode& n = t.nodes[i];
        if (n.is_leaf()) continue;
        // Children always follow their parent, which rules out cycles.
        if (n.feature > 2 || n.left <= i || n.right <= i || n.left >= size ||
            n.right >= size)
          throw DataError("pool file is corrupt (bad tree node)");
      }
    }
    m.forest = Forest(p, std::move(trees));
    models.push_back(std::move(m));
  }
  return ModelPool(std::move(models));
}

void save_pool(const ModelPool& pool, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string());
  save_pool(pool, out);
}

ModelPool load_pool(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return load_pool(in);
}

}  // namespace handseg
