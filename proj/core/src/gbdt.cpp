#include "sieve/gbdt.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <queue>
#include <random>
#include <sstream>

namespace sieve {

void TreeParams::validate() const {
  if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (max_leaves < 2) throw std::invalid_argument("max_leaves must be >= 2");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(subsample > 0 && subsample <= 1)) throw std::invalid_argument("subsample must be in (0,1]");
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
}

double sigmoid(double x) noexcept {
  double s = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(s, lo, hi);
}

double Tree::predict(const SparseVector& v) const noexcept {
  std::int32_t at = 0;
  while (!nodes[at].leaf()) {
    const TreeNode& n = nodes[at];
    at = v.at(static_cast<std::uint32_t>(n.feature)) >= n.value ? n.right : n.left;
  }
  return nodes[at].value;
}

namespace {

std::uint32_t depth_from(const std::vector<TreeNode>& nodes, std::int32_t at) {
  if (nodes[at].leaf()) return 0;
  return 1 + std::max(depth_from(nodes, nodes[at].left), depth_from(nodes, nodes[at].right));
}

}  // namespace

std::uint32_t Tree::depth() const noexcept { return nodes.empty() ? 0 : depth_from(nodes, 0); }

std::uint32_t Tree::leaves() const noexcept {
  return static_cast<std::uint32_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.leaf(); }));
}

double TreeModel::margin(const SparseVector& v) const noexcept {
  double m = base_score;
  for (const Tree& t : trees) m += t.predict(v);
  return m;
}

double TreeModel::score(const SparseVector& v) const noexcept { return sigmoid(margin(v)); }

// ---------------------------------------------------------------------------
// Training

namespace {

struct Split {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
};

struct Item {
  std::uint32_t feature;
  double value;
  double g;
  double h;
};

struct Bucket {
  double value;
  double g;
  double h;
  std::uint32_t n;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const LabeledVector> data, const std::vector<double>& grad,
              const std::vector<double>& hess, const TreeParams& params)
      : data_(data), grad_(grad), hess_(hess), params_(params) {}

  Tree build(std::vector<std::uint32_t> rows) {
    Tree tree;
    struct Pending {
      std::int32_t node;
      std::vector<std::uint32_t> rows;
      double g, h;
      std::uint32_t depth;
      Split split;
    };
    auto stats = [&](const std::vector<std::uint32_t>& rs) {
      double g = 0, h = 0;
      for (auto r : rs) {
        g += grad_[r];
        h += hess_[r];
      }
      return std::pair{g, h};
    };
    auto make = [&](std::vector<std::uint32_t> rs, std::uint32_t depth) {
      auto [g, h] = stats(rs);
      Pending p{static_cast<std::int32_t>(tree.nodes.size()), std::move(rs), g, h, depth, {}};
      tree.nodes.push_back(TreeNode{-1, leaf_value(g, h), -1, -1});
      if (depth < params_.max_depth) p.split = best_split(p.rows, g, h);
      return p;
    };
    // Best-first growth: highest gain first, ties to the older node.
    std::vector<Pending> pool;
    auto cmp = [&pool](std::size_t a, std::size_t b) {
      const Pending& x = pool[a];
      const Pending& y = pool[b];
      if (x.split.gain != y.split.gain) return x.split.gain < y.split.gain;
      return x.node > y.node;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> open(cmp);
    pool.push_back(make(std::move(rows), 0));
    open.push(0);
    std::uint32_t leaves = 1;
    while (!open.empty() && leaves < params_.max_leaves) {
      const std::size_t top = open.top();
      open.pop();
      const Split split = pool[top].split;
      if (split.feature < 0 || split.gain <= 1e-12) continue;
      std::vector<std::uint32_t> left, right;
      for (auto r : pool[top].rows) {
        double v = data_[r].vector.at(static_cast<std::uint32_t>(split.feature));
        (v >= split.threshold ? right : left).push_back(r);
      }
      pool[top].rows = {};
      const std::uint32_t depth = pool[top].depth + 1;
      const std::int32_t node = pool[top].node;
      Pending l = make(std::move(left), depth);
      Pending r = make(std::move(right), depth);
      TreeNode& n = tree.nodes[node];
      n.feature = split.feature;
      n.value = split.threshold;
      n.left = l.node;
      n.right = r.node;
      ++leaves;
      pool.push_back(std::move(l));
      open.push(pool.size() - 1);
      pool.push_back(std::move(r));
      open.push(pool.size() - 1);
    }
    return tree;
  }

 private:
  double leaf_value(double g, double h) const {
    return -g / (h + params_.lambda) * params_.learning_rate;
  }

  double objective(double g, double h) const { return g * g / (h + params_.lambda); }

  Split best_split(const std::vector<std::uint32_t>& rows, double g_total, double h_total) {
    const auto n_total = static_cast<std::uint32_t>(rows.size());
    Split best;
    if (n_total < 2 * params_.min_samples_leaf) return best;
    items_.clear();
    for (auto r : rows) {
      for (const auto& [f, v] : data_[r].vector.entries()) {
        items_.push_back(Item{f, v, grad_[r], hess_[r]});
      }
    }
    std::sort(items_.begin(), items_.end(), [](const Item& a, const Item& b) {
      return a.feature != b.feature ? a.feature < b.feature : a.value < b.value;
    });
    const double parent = objective(g_total, h_total);
    std::vector<Bucket> buckets;
    std::size_t i = 0;
    while (i < items_.size()) {
      const std::uint32_t f = items_[i].feature;
      buckets.clear();
      double g_nz = 0, h_nz = 0;
      std::uint32_t n_nz = 0;
      for (; i < items_.size() && items_[i].feature == f; ++i) {
        const Item& it = items_[i];
        if (buckets.empty() || buckets.back().value != it.value) {
          buckets.push_back(Bucket{it.value, 0, 0, 0});
        }
        buckets.back().g += it.g;
        buckets.back().h += it.h;
        buckets.back().n += 1;
        g_nz += it.g;
        h_nz += it.h;
        ++n_nz;
      }
      if (n_nz < n_total) {
        Bucket zero{0.0, g_total - g_nz, std::max(h_total - h_nz, 0.0), n_total - n_nz};
        auto pos = std::lower_bound(buckets.begin(), buckets.end(), 0.0,
                                    [](const Bucket& b, double v) { return b.value < v; });
        buckets.insert(pos, zero);
      }
      double gl = 0, hl = 0;
      std::uint32_t nl = 0;
      for (std::size_t k = 0; k + 1 < buckets.size(); ++k) {
        gl += buckets[k].g;
        hl += buckets[k].h;
        nl += buckets[k].n;
        const std::uint32_t nr = n_total - nl;
        if (nl < params_.min_samples_leaf || nr < params_.min_samples_leaf) continue;
        const double gain =
            objective(gl, hl) + objective(g_total - gl, std::max(h_total - hl, 0.0)) - parent;
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = static_cast<std::int32_t>(f);
          best.threshold = 0.5 * (buckets[k].value + buckets[k + 1].value);
        }
      }
    }
    return best;
  }

  std::span<const LabeledVector> data_;
  const std::vector<double>& grad_;
  const std::vector<double>& hess_;
  const TreeParams& params_;
  std::vector<Item> items_;
};

double row_loss(bool positive, double margin) {
  // log(1 + exp(-y*m)) with y in {-1, +1}, computed stably
  double z = positive ? -margin : margin;
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

double logistic_loss(const TreeModel& model, std::span<const LabeledVector> data) {
  if (data.empty()) return 0.0;
  double total = 0;
  for (const LabeledVector& lv : data) total += row_loss(lv.positive, model.margin(lv.vector));
  return total / static_cast<double>(data.size());
}

TreeModel train(std::span<const LabeledVector> data, const TreeParams& params, ModelInfo info,
                TrainReport* report) {
  params.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const std::uint32_t dim = data.front().vector.dimension();
  for (const LabeledVector& lv : data) {
    if (lv.vector.dimension() != dim) throw std::invalid_argument("train: dimension mismatch");
  }

  TreeModel model;
  model.dimension = dim;
  model.info = info;
  const std::size_t n = data.size();
  if (params.boost_from_average) {
    double pos = 0;
    for (const LabeledVector& lv : data) pos += lv.positive ? 1 : 0;
    double rate = std::clamp(pos / static_cast<double>(n), 1e-6, 1 - 1e-6);
    model.base_score = std::log(rate / (1 - rate));
  }

  std::vector<double> margin(n, model.base_score), grad(n), hess(n);
  auto mean_loss = [&] {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += row_loss(data[i].positive, margin[i]);
    return total / static_cast<double>(n);
  };
  if (report) report->loss.assign(1, mean_loss());

  std::mt19937_64 rng(params.seed);
  std::vector<std::uint32_t> all(n);
  for (std::uint32_t i = 0; i < n; ++i) all[i] = i;

  for (std::uint32_t round = 0; round < params.trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      double p = sigmoid(margin[i]);
      grad[i] = p - (data[i].positive ? 1.0 : 0.0);
      hess[i] = std::max(p * (1 - p), 1e-16);
    }
    std::vector<std::uint32_t> rows;
    if (params.subsample < 1.0) {
      std::bernoulli_distribution keep(params.subsample);
      for (std::uint32_t i = 0; i < n; ++i) {
        if (keep(rng)) rows.push_back(i);
      }
      if (rows.empty()) rows = all;
    } else {
      rows = all;
    }
    TreeBuilder builder(data, grad, hess, params);
    Tree tree = builder.build(std::move(rows));
    for (std::size_t i = 0; i < n; ++i) margin[i] += tree.predict(data[i].vector);
    model.trees.push_back(std::move(tree));
    if (report) report->loss.push_back(mean_loss());
  }
  return model;
}

// ---------------------------------------------------------------------------
// Serialization: little-endian, versioned.

namespace {

constexpr char kMagic[8] = {'S', 'I', 'E', 'V', 'E', 'G', 'B', 'M'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) {
      throw ModelFormatError(ModelFormatError::Kind::Truncated, "model file truncated");
    }
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(u8()) << (8 * k);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(u8()) << (8 * k);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

[[noreturn]] void corrupt(const std::string& what) {
  throw ModelFormatError(ModelFormatError::Kind::Corrupt, "corrupt model: " + what);
}

}  // namespace

std::string save_model(const TreeModel& model) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kModelVersion);
  w.u32(model.info.features.base);
  w.u32(model.info.features.walk_length);
  w.u8(model.info.features.count_features ? 1 : 0);
  w.u8(model.info.pair_mode ? (*model.info.pair_mode == PairMode::Fuse ? 1 : 2) : 0);
  w.u32(model.dimension);
  w.f64(model.base_score);
  w.u32(static_cast<std::uint32_t>(model.trees.size()));
  for (const Tree& t : model.trees) {
    w.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const TreeNode& n : t.nodes) {
      w.i32(n.feature);
      w.f64(n.value);
      w.i32(n.left);
      w.i32(n.right);
    }
  }
  return w.take();
}

TreeModel load_model(std::string_view bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) {
    throw ModelFormatError(ModelFormatError::Kind::BadMagic, "not a sieve model file");
  }
  if (std::uint32_t version = r.u32(); version != kModelVersion) {
    throw ModelFormatError(ModelFormatError::Kind::Version,
                           "unsupported model version " + std::to_string(version) +
                               " (expected " + std::to_string(kModelVersion) + ")");
  }
  TreeModel m;
  m.info.features.base = r.u32();
  m.info.features.walk_length = r.u32();
  m.info.features.count_features = r.u8() != 0;
  switch (r.u8()) {
    case 0: break;
    case 1: m.info.pair_mode = PairMode::Fuse; break;
    case 2: m.info.pair_mode = PairMode::Cat; break;
    default: corrupt("pair mode");
  }
  m.dimension = r.u32();
  m.base_score = r.f64();
  const std::uint32_t ntrees = r.u32();
  for (std::uint32_t t = 0; t < ntrees; ++t) {
    Tree tree;
    const std::uint32_t nn = r.u32();
    if (nn == 0) corrupt("empty tree");
    r.need(static_cast<std::size_t>(nn) * 20);
    tree.nodes.resize(nn);
    for (TreeNode& n : tree.nodes) {
      n.feature = r.i32();
      n.value = r.f64();
      n.left = r.i32();
      n.right = r.i32();
    }
    for (std::uint32_t k = 0; k < nn; ++k) {
      const TreeNode& n = tree.nodes[k];
      if (n.leaf()) continue;
      auto in_range = [&](std::int32_t c) {
        return c > static_cast<std::int32_t>(k) && c < static_cast<std::int32_t>(nn);
      };
      if (!in_range(n.left) || !in_range(n.right)) corrupt("child index out of range");
      if (static_cast<std::uint32_t>(n.feature) >= m.dimension) corrupt("feature out of range");
    }
    m.trees.push_back(std::move(tree));
  }
  if (!r.done()) corrupt("trailing bytes");
  return m;
}

void save_model_file(const TreeModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model '" + path + "'");
  std::string bytes = save_model(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TreeModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

std::string dump_model_text(const TreeModel& m) {
  std::ostringstream os;
  os.precision(17);
  os << "version " << kModelVersion << "\n";
  os << "features base=" << m.info.features.base << " walk=" << m.info.features.walk_length
     << " counts=" << (m.info.features.count_features ? 1 : 0);
  if (m.info.pair_mode) os << " pair=" << pair_mode_name(*m.info.pair_mode);
  os << "\ndimension " << m.dimension << "\nbase_score " << m.base_score << "\n";
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    os << "tree " << t << "\n";
    for (std::size_t k = 0; k < m.trees[t].nodes.size(); ++k) {
      const TreeNode& n = m.trees[t].nodes[k];
      if (n.leaf()) {
        os << "  " << k << " leaf " << n.value << "\n";
      } else {
        os << "  " << k << " f" << n.feature << " >= " << n.value << " ? " << n.right << " : "
           << n.left << "\n";
      }
    }
  }
  return os.str();
}

}  // namespace sieve
