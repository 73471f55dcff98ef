#include <bit>
#include <fstream>
#include <sstream>

#include "mtd/classifier.hpp"
#include "mtd/error.hpp"

namespace mtd {
namespace {

constexpr char kMagic[4] = {'M', 'T', 'D', 'M'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v), 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    if (s.size() > 0xFFFF) throw ConfigError("class name too long for model file");
    u16(static_cast<std::uint16_t>(s.size()));
    out_ += s;
  }
  void count(std::size_t n) {
    if (n > 0xFFFFFFFFu) throw ConfigError("model too large for file format");
    u32(static_cast<std::uint32_t>(n));
  }
  std::string take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : b_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1, "u8")); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2, "u16")); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4, "u32")); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(le(4, "i32"))); }
  std::uint64_t u64() { return le(8, "u64"); }
  double f64() { return std::bit_cast<double>(le(8, "f64")); }
  std::string str() {
    const auto n = u16();
    need(n, "string");
    std::string s(b_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  /// Element count whose payload must still fit in the buffer.
  std::size_t count(std::size_t min_bytes_each, const char* what) {
    const auto at = pos_;
    const std::size_t n = u32();
    if (min_bytes_each && n > remaining() / min_bytes_each) fail(std::string(what) + " count exceeds file size", at);
    return n;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }
  [[noreturn]] void fail(const std::string& what, std::size_t at) const { throw FormatError("model file: " + what, at); }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) fail(std::string("truncated while reading ") + what, pos_);
  }
  std::uint64_t le(int bytes, const char* what) {
    need(static_cast<std::size_t>(bytes), what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t{static_cast<unsigned char>(b_[pos_ + i])} << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

void write_tree(Writer& w, const DecisionTreeModel& t, std::uint64_t seed) {
  w.u64(seed);
  w.u32(t.params.max_depth);
  w.count(t.params.min_samples_leaf);
  w.count(t.params.max_features);
  w.count(t.nodes.size());
  for (const auto& n : t.nodes) {
    w.i32(n.feature);
    if (n.is_leaf()) {
      for (auto h : n.histogram) w.u32(h);
    } else {
      w.f64(n.threshold);
      w.u32(n.left);
      w.u32(n.right);
    }
  }
}

DecisionTreeModel read_tree(Reader& r, const std::vector<std::string>& classes, std::size_t n_features,
                            std::uint64_t& seed) {
  DecisionTreeModel t;
  t.classes = classes;
  t.n_features = n_features;
  seed = r.u64();
  t.params.seed = seed;
  t.params.max_depth = r.u32();
  t.params.min_samples_leaf = r.u32();
  t.params.max_features = r.u32();
  const auto n_nodes = r.count(4, "node");
  if (n_nodes == 0) r.fail("tree has no nodes", r.pos());
  t.nodes.resize(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    auto& node = t.nodes[i];
    const auto at = r.pos();
    node.feature = r.i32();
    if (node.feature < 0) {
      if (node.feature != -1) r.fail("invalid leaf marker", at);
      node.histogram.resize(classes.size());
      std::uint64_t total = 0;
      for (auto& h : node.histogram) total += h = r.u32();
      if (total == 0) r.fail("leaf has an empty histogram", at);
    } else {
      if (static_cast<std::size_t>(node.feature) >= n_features) r.fail("feature index out of range", at);
      node.threshold = r.f64();
      node.left = r.u32();
      node.right = r.u32();
      // Children are stored after their parent, which also rules out cycles.
      if (node.left <= i || node.right <= i || node.left >= n_nodes || node.right >= n_nodes)
        r.fail("child index out of range", at);
    }
  }
  return t;
}

}  // namespace

std::string serialize_model(const Model& model) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kModelFormatVersion);
  w.u8(static_cast<std::uint8_t>(model.kind()));
  w.u8(0);
  w.count(model.n_features());
  w.count(model.classes().size());
  for (const auto& c : model.classes()) w.str(c);

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTreeModel>) {
          write_tree(w, m, m.params.seed);
        } else if constexpr (std::is_same_v<T, RandomForestModel>) {
          w.count(m.features_per_split);
          w.count(m.trees.size());
          for (std::size_t i = 0; i < m.trees.size(); ++i) write_tree(w, m.trees[i], m.tree_seeds[i]);
        } else {
          w.count(m.k);
          w.count(m.labels.size());
          for (double x : m.points) w.f64(x);
          for (auto l : m.labels) w.u32(l);
        }
      },
      model.variant());
  return w.take();
}

Model deserialize_model(std::string_view bytes) {
  Reader r(bytes);
  for (char c : kMagic)
    if (r.u8() != static_cast<std::uint8_t>(c)) r.fail("bad magic, not a model file", 0);
  const auto version = r.u16();
  if (version != kModelFormatVersion)
    r.fail("unsupported version " + std::to_string(version) + ", expected " + std::to_string(kModelFormatVersion), 4);
  const auto kind_at = r.pos();
  const auto kind = r.u8();
  if (r.u8() != 0) r.fail("reserved byte must be zero", kind_at + 1);
  const std::size_t n_features = r.u32();
  if (n_features == 0) r.fail("feature count is zero", r.pos() - 4);
  const auto n_classes = r.count(2, "class");
  if (n_classes == 0) r.fail("class count is zero", r.pos() - 4);
  std::vector<std::string> classes;
  for (std::size_t i = 0; i < n_classes; ++i) classes.push_back(r.str());

  auto finish = [&](Model m) {
    if (r.remaining() != 0) r.fail("trailing bytes after model", r.pos());
    return m;
  };

  switch (static_cast<ModelKind>(kind)) {
    case ModelKind::Tree: {
      std::uint64_t seed = 0;
      auto t = read_tree(r, classes, n_features, seed);
      return finish(Model(std::move(t)));
    }
    case ModelKind::Forest: {
      RandomForestModel f;
      f.classes = classes;
      f.n_features = n_features;
      f.features_per_split = r.u32();
      const auto n_trees = r.count(28, "tree");
      if (n_trees == 0) r.fail("forest has no trees", r.pos() - 4);
      for (std::size_t i = 0; i < n_trees; ++i) {
        std::uint64_t seed = 0;
        f.trees.push_back(read_tree(r, classes, n_features, seed));
        f.tree_seeds.push_back(seed);
      }
      return finish(Model(std::move(f)));
    }
    case ModelKind::Knn: {
      KnnModel k;
      k.classes = classes;
      k.n_features = n_features;
      k.k = r.u32();
      if (k.k == 0) r.fail("k is zero", r.pos() - 4);
      const auto n = r.count(8 * n_features + 4, "point");
      if (n == 0) r.fail("no reference points", r.pos() - 4);
      k.points.resize(n * n_features);
      for (auto& x : k.points) x = r.f64();
      k.labels.resize(n);
      for (auto& l : k.labels) {
        const auto at = r.pos();
        l = r.u32();
        if (l >= n_classes) r.fail("label index out of range", at);
      }
      return finish(Model(std::move(k)));
    }
  }
  r.fail("unknown model kind " + std::to_string(kind), kind_at);
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write model to '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("failed writing model to '" + path.string() + "'");
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace mtd
