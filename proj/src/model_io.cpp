#include "georf/model_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <system_error>
#include <vector>

#include <json.hpp>

namespace georf {

namespace {

// ---- writing ----

class JsonEmitter {
 public:
  explicit JsonEmitter(std::ostream& os) : os_(os) {}

  void raw(char c) { os_.put(c); }
  void raw(const char* s) { os_ << s; }

  void string(const std::string& s) {
    os_.put('"');
    for (char c : s) {
      switch (c) {
        case '"': os_ << "\\\""; break;
        case '\\': os_ << "\\\\"; break;
        case '\n': os_ << "\\n"; break;
        case '\t': os_ << "\\t"; break;
        case '\r': os_ << "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            os_ << buf;
          } else {
            os_.put(c);
          }
      }
    }
    os_.put('"');
  }

  // Shortest representation that round-trips.
  void number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os_.write(buf, res.ptr - buf);
  }

  template <typename Int>
  void integer(Int v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os_.write(buf, res.ptr - buf);
  }

  void key(const char* k) {
    os_.put('"');
    os_ << k;
    os_ << "\":";
  }

 private:
  std::ostream& os_;
};

void emit_node(JsonEmitter& out, const Tree& tree, std::int32_t id) {
  const auto& node = tree.nodes[id];
  out.raw('{');
  if (!node.is_leaf()) {
    out.key("f");
    out.integer(node.feature);
    out.raw(',');
    out.key("t");
    out.number(node.threshold);
    out.raw(',');
  }
  out.key("p");
  out.number(node.class1_fraction);
  out.raw(',');
  out.key("n");
  out.integer(node.sample_count);
  if (!node.is_leaf()) {
    out.raw(',');
    out.key("l");
    emit_node(out, tree, node.left);
    out.raw(',');
    out.key("r");
    emit_node(out, tree, node.right);
  }
  out.raw('}');
}

void emit_forest(JsonEmitter& out, const Forest& forest) {
  out.raw('[');
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    if (t) out.raw(',');
    emit_node(out, forest.trees[t], 0);
  }
  out.raw(']');
}

// ---- reading ----

struct ModelSax {
  using json = nlohmann::json;

  enum class Section {
    None,
    FeatureNames,
    Scaler,
    ScalerMean,
    ScalerSd,
    ScalerConstant,
    Hyper,
    ForestParams,
    Anchors,
    GlobalForest,
    LocalForests,
  };

  GrfModel model;
  bool saw_version = false;
  bool kind_ok = false;

  Section section = Section::None;
  std::string last_key;
  int top_depth = 0;          // object nesting outside tree nodes
  int array_depth = 0;        // arrays inside the active section
  std::vector<double> pair_buf;
  std::vector<double> scaler_mean, scaler_sd;
  std::vector<bool> scaler_const;

  Forest* cur_forest = nullptr;
  Tree* cur_tree = nullptr;
  std::vector<std::int32_t> node_stack;
  int pending_child = -1;  // 0 left, 1 right

  [[noreturn]] static void fail(const std::string& what) {
    throw std::runtime_error("model parse: " + what);
  }

  bool in_tree() const { return cur_forest != nullptr && array_depth >= 1; }

  // scalar dispatch

  bool set_double(double v) {
    switch (section) {
      case Section::ScalerMean: scaler_mean.push_back(v); return true;
      case Section::ScalerSd: scaler_sd.push_back(v); return true;
      case Section::Anchors: pair_buf.push_back(v); return true;
      case Section::Hyper:
        if (last_key == "local_weight_a") model.hyper.local_weight_a = v;
        else if (last_key == "bandwidth_n") model.hyper.bandwidth_n = static_cast<int>(v);
        else if (last_key == "local_mixing_k") model.hyper.local_mixing_k = static_cast<int>(v);
        else fail("unknown hyper field " + last_key);
        return true;
      case Section::ForestParams: {
        auto& fp = model.hyper.forest_params;
        if (last_key == "b_trees") fp.b_trees = static_cast<int>(v);
        else if (last_key == "mtry") fp.mtry = static_cast<int>(v);
        else if (last_key == "min_leaf") fp.min_leaf = static_cast<int>(v);
        else if (last_key == "max_depth") fp.max_depth = static_cast<int>(v);
        else if (last_key == "seed") fp.seed = static_cast<std::uint64_t>(v);
        else fail("unknown forest_params field " + last_key);
        return true;
      }
      case Section::GlobalForest:
      case Section::LocalForests: {
        if (node_stack.empty()) fail("number outside node");
        auto& node = cur_tree->nodes[node_stack.back()];
        if (last_key == "f") node.feature = static_cast<std::int32_t>(v);
        else if (last_key == "t") node.threshold = v;
        else if (last_key == "p") node.class1_fraction = v;
        else if (last_key == "n") node.sample_count = static_cast<std::int32_t>(v);
        else fail("unknown node field " + last_key);
        return true;
      }
      case Section::None:
        if (last_key == "schema_version") {
          if (static_cast<int>(v) != kModelSchemaVersion)
            fail("unsupported schema_version");
          saw_version = true;
          return true;
        }
        fail("unexpected number for key " + last_key);
      default: fail("unexpected number");
    }
  }

  // exact-width path for the seed, which truncates through double
  bool set_unsigned(std::uint64_t v) {
    if (section == Section::ForestParams && last_key == "seed") {
      model.hyper.forest_params.seed = v;
      return true;
    }
    return set_double(static_cast<double>(v));
  }

  // SAX interface

  bool null() { fail("unexpected null"); }

  bool boolean(bool v) {
    if (section == Section::ScalerConstant) {
      scaler_const.push_back(v);
      return true;
    }
    fail("unexpected boolean");
  }

  bool number_integer(json::number_integer_t v) {
    return set_double(static_cast<double>(v));
  }
  bool number_unsigned(json::number_unsigned_t v) { return set_unsigned(v); }
  bool number_float(json::number_float_t v, const std::string&) {
    return set_double(v);
  }

  bool string(std::string& v) {
    if (section == Section::FeatureNames) {
      model.feature_names.push_back(v);
      return true;
    }
    if (section == Section::None && last_key == "kind") {
      if (v != "georf_model") fail("not a model file");
      kind_ok = true;
      return true;
    }
    fail("unexpected string for key " + last_key);
  }

  bool binary(json::binary_t&) { fail("unexpected binary"); }

  bool key(std::string& k) {
    last_key = k;
    if (in_tree() && !node_stack.empty()) {
      if (k == "l") pending_child = 0;
      else if (k == "r") pending_child = 1;
    }
    return true;
  }

  bool start_object(std::size_t) {
    if (in_tree()) {
      if (node_stack.empty()) {
        if (section == Section::LocalForests && array_depth < 2)
          fail("tree outside forest array");
        cur_forest->trees.emplace_back();
        cur_tree = &cur_forest->trees.back();
      } else if (pending_child < 0) {
        fail("child node without l/r key");
      }
      const auto id = static_cast<std::int32_t>(cur_tree->nodes.size());
      cur_tree->nodes.push_back({});
      if (!node_stack.empty()) {
        auto& parent = cur_tree->nodes[node_stack.back()];
        (pending_child == 0 ? parent.left : parent.right) = id;
        pending_child = -1;
      }
      node_stack.push_back(id);
      return true;
    }
    ++top_depth;
    if (top_depth == 2) {
      if (last_key == "scaler") section = Section::Scaler;
      else if (last_key == "hyper") section = Section::Hyper;
      else fail("unexpected object for key " + last_key);
    } else if (top_depth == 3) {
      if (section == Section::Hyper && last_key == "forest_params")
        section = Section::ForestParams;
      else
        fail("unexpected nested object for key " + last_key);
    } else if (top_depth > 3) {
      fail("object nested too deep");
    }
    return true;
  }

  bool end_object() {
    if (in_tree()) {
      if (node_stack.empty()) fail("unbalanced node object");
      node_stack.pop_back();
      return true;
    }
    if (section == Section::ForestParams) section = Section::Hyper;
    else if (section == Section::Hyper || section == Section::Scaler)
      section = Section::None;
    --top_depth;
    return true;
  }

  bool start_array(std::size_t) {
    switch (section) {
      case Section::None:
        if (last_key == "feature_names") section = Section::FeatureNames;
        else if (last_key == "anchors") section = Section::Anchors;
        else if (last_key == "global_forest") {
          section = Section::GlobalForest;
          cur_forest = &model.global_forest;
        } else if (last_key == "local_forests") {
          section = Section::LocalForests;
        } else {
          fail("unexpected array for key " + last_key);
        }
        array_depth = 1;
        return true;
      case Section::Scaler:
        if (last_key == "mean") section = Section::ScalerMean;
        else if (last_key == "sd") section = Section::ScalerSd;
        else if (last_key == "constant") section = Section::ScalerConstant;
        else fail("unexpected scaler array " + last_key);
        array_depth = 1;
        return true;
      case Section::Anchors:
        if (array_depth != 1) fail("anchor nesting");
        array_depth = 2;
        pair_buf.clear();
        return true;
      case Section::LocalForests:
        if (array_depth != 1) fail("local forest nesting");
        array_depth = 2;
        model.local_forests.emplace_back();
        cur_forest = &model.local_forests.back();
        return true;
      default:
        fail("unexpected array");
    }
  }

  bool end_array() {
    switch (section) {
      case Section::FeatureNames:
        section = Section::None;
        array_depth = 0;
        return true;
      case Section::ScalerMean:
      case Section::ScalerSd:
      case Section::ScalerConstant:
        section = Section::Scaler;
        array_depth = 0;
        return true;
      case Section::Anchors:
        if (array_depth == 2) {
          if (pair_buf.size() != 2) fail("anchor is not a coordinate pair");
          model.anchors.push_back({pair_buf[0], pair_buf[1]});
          array_depth = 1;
        } else {
          section = Section::None;
          array_depth = 0;
        }
        return true;
      case Section::GlobalForest:
        section = Section::None;
        array_depth = 0;
        cur_forest = nullptr;
        return true;
      case Section::LocalForests:
        if (array_depth == 2) {
          array_depth = 1;
          cur_forest = nullptr;
        } else {
          section = Section::None;
          array_depth = 0;
        }
        return true;
      default:
        fail("unbalanced array");
    }
  }

  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::detail::exception& ex) {
    fail("at byte " + std::to_string(position) + ": " + ex.what());
  }
};

void validate_forest(const Forest& forest, std::int32_t feature_count,
                     const char* what) {
  if (forest.trees.empty())
    throw std::runtime_error(std::string("model parse: empty ") + what);
  for (const auto& tree : forest.trees) {
    const auto n = static_cast<std::int32_t>(tree.nodes.size());
    if (n == 0) throw std::runtime_error("model parse: empty tree");
    for (std::int32_t i = 0; i < n; ++i) {
      const auto& node = tree.nodes[i];
      if (!(node.class1_fraction >= 0.0 && node.class1_fraction <= 1.0))
        throw std::runtime_error("model parse: class fraction outside [0,1]");
      if (node.sample_count < 1)
        throw std::runtime_error("model parse: node sample count < 1");
      if (node.is_leaf()) continue;
      if (node.feature >= feature_count)
        throw std::runtime_error("model parse: feature index out of range");
      // Preorder layout: children strictly after the parent, which also
      // rules out cycles.
      if (node.left <= i || node.left >= n || node.right <= i || node.right >= n)
        throw std::runtime_error("model parse: dangling child index");
      if (!std::isfinite(node.threshold))
        throw std::runtime_error("model parse: non-finite threshold");
    }
  }
}

}  // namespace

void save_model(const GrfModel& model, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  std::vector<char> buffer(1 << 20);
  file.rdbuf()->pubsetbuf(buffer.data(), static_cast<std::streamsize>(buffer.size()));

  JsonEmitter out(file);
  out.raw('{');
  out.key("schema_version");
  out.integer(kModelSchemaVersion);
  out.raw(',');
  out.key("kind");
  out.string("georf_model");
  out.raw(',');

  out.key("feature_names");
  out.raw('[');
  for (std::size_t i = 0; i < model.feature_names.size(); ++i) {
    if (i) out.raw(',');
    out.string(model.feature_names[i]);
  }
  out.raw("],");

  out.key("scaler");
  out.raw('{');
  out.key("mean");
  out.raw('[');
  for (std::size_t i = 0; i < model.scaler.size(); ++i) {
    if (i) out.raw(',');
    out.number(model.scaler[i].mean);
  }
  out.raw("],");
  out.key("sd");
  out.raw('[');
  for (std::size_t i = 0; i < model.scaler.size(); ++i) {
    if (i) out.raw(',');
    out.number(model.scaler[i].sd);
  }
  out.raw("],");
  out.key("constant");
  out.raw('[');
  for (std::size_t i = 0; i < model.scaler.size(); ++i) {
    if (i) out.raw(',');
    out.raw(model.scaler[i].constant ? "true" : "false");
  }
  out.raw("]},");

  out.key("hyper");
  out.raw('{');
  out.key("bandwidth_n");
  out.integer(model.hyper.bandwidth_n);
  out.raw(',');
  out.key("local_weight_a");
  out.number(model.hyper.local_weight_a);
  out.raw(',');
  out.key("local_mixing_k");
  out.integer(model.hyper.local_mixing_k);
  out.raw(',');
  out.key("forest_params");
  out.raw('{');
  const auto& fp = model.hyper.forest_params;
  out.key("b_trees");
  out.integer(fp.b_trees);
  out.raw(',');
  out.key("mtry");
  out.integer(fp.mtry);
  out.raw(',');
  out.key("min_leaf");
  out.integer(fp.min_leaf);
  out.raw(',');
  out.key("max_depth");
  out.integer(fp.max_depth);
  out.raw(',');
  out.key("seed");
  out.integer(fp.seed);
  out.raw("}},");

  out.key("anchors");
  out.raw('[');
  for (std::size_t i = 0; i < model.anchors.size(); ++i) {
    if (i) out.raw(',');
    out.raw('[');
    out.number(model.anchors[i].u);
    out.raw(',');
    out.number(model.anchors[i].v);
    out.raw(']');
  }
  out.raw("],");

  out.key("global_forest");
  emit_forest(out, model.global_forest);
  out.raw(',');

  out.key("local_forests");
  out.raw('[');
  for (std::size_t i = 0; i < model.local_forests.size(); ++i) {
    if (i) out.raw(',');
    emit_forest(out, model.local_forests[i]);
  }
  out.raw("]}");
  out.raw('\n');
  file.flush();
  if (!file) throw std::runtime_error("write failed for " + path);
}

GrfModel load_model(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path);
  std::vector<char> buffer(1 << 20);
  file.rdbuf()->pubsetbuf(buffer.data(), static_cast<std::streamsize>(buffer.size()));

  ModelSax sax;
  if (!nlohmann::json::sax_parse(file, &sax))
    throw std::runtime_error("model parse: aborted");

  GrfModel model = std::move(sax.model);
  if (!sax.saw_version) throw std::runtime_error("model parse: missing schema_version");
  if (!sax.kind_ok) throw std::runtime_error("model parse: missing kind");
  if (sax.scaler_mean.size() != model.feature_names.size() ||
      sax.scaler_sd.size() != sax.scaler_mean.size() ||
      sax.scaler_const.size() != sax.scaler_mean.size())
    throw std::runtime_error("model parse: scaler/manifest size mismatch");
  model.scaler.resize(sax.scaler_mean.size());
  for (std::size_t i = 0; i < model.scaler.size(); ++i) {
    model.scaler[i].mean = sax.scaler_mean[i];
    model.scaler[i].sd = sax.scaler_sd[i];
    model.scaler[i].constant = sax.scaler_const[i];
  }

  if (model.anchors.size() != model.local_forests.size())
    throw std::runtime_error("model parse: anchors/local forests mismatch");
  if (model.anchors.empty())
    throw std::runtime_error("model parse: no local forests");
  if (model.hyper.bandwidth_n < 2 || model.hyper.local_weight_a < 0.0 ||
      model.hyper.local_weight_a > 1.0 || model.hyper.local_mixing_k < 1)
    throw std::runtime_error("model parse: hyperparameters violate invariants");

  const auto p = static_cast<std::int32_t>(model.feature_names.size());
  model.global_forest.feature_count = p;
  model.global_forest.params = model.hyper.forest_params;
  validate_forest(model.global_forest, p, "global forest");
  for (auto& lf : model.local_forests) {
    lf.feature_count = p;
    lf.params = model.hyper.forest_params;
    validate_forest(lf, p, "local forest");
  }
  model.anchor_index = SpatialIndex(model.anchors);
  return model;
}

}  // namespace georf
