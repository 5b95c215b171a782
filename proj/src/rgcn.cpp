#include "stack_order/rgcn.hpp"

#include <cmath>
#include <stdexcept>

#include "stack_order/rng.hpp"

namespace stack_order {
namespace {

std::string projection_name(NodeRole r) { return "projection." + std::string(role_name(r)); }
std::string relation_name_for(int layer, Relation r) {
  return "layer" + std::to_string(layer) + ".relation." + std::string(relation_name(r));
}
std::string self_name(int layer) { return "layer" + std::to_string(layer) + ".self"; }
constexpr const char* kClassifierName = "classifier.w";

std::vector<NodeRole> present_roles(const GraphConfig& g) {
  std::vector<NodeRole> roles{NodeRole::Sentence};
  if (g.use_csk) {
    roles.push_back(NodeRole::Past);
    roles.push_back(NodeRole::Future);
  }
  if (g.use_global) roles.push_back(NodeRole::Global);
  return roles;
}

}  // namespace

std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_layout(const ModelShape& shape) {
  if (shape.d_in == 0 || shape.d_h == 0) throw std::invalid_argument("parameter_layout: d_in and d_h must be positive");
  std::vector<std::pair<std::string, std::vector<std::size_t>>> layout;
  for (NodeRole r : present_roles(shape.graph)) {
    const std::size_t width = shape.input.of(r);
    if (width == 0) {
      throw std::invalid_argument("parameter_layout: " + std::string(role_name(r)) + " input width is zero");
    }
    if (width != shape.d_in) layout.push_back({projection_name(r), {shape.d_in, width}});
  }
  for (int layer = 1; layer <= 2; ++layer) {
    const std::size_t fan_in = layer == 1 ? shape.d_in : shape.d_h;
    for (Relation r : active_relations(shape.graph)) layout.push_back({relation_name_for(layer, r), {shape.d_h, fan_in}});
    layout.push_back({self_name(layer), {shape.d_h, fan_in}});
  }
  layout.push_back({kClassifierName, {shape.pair_feature_width()}});
  return layout;
}

ModelParameters ModelParameters::initialize(const ModelShape& shape, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "model/init");
  std::vector<Parameter> list;
  for (auto& [name, dims] : parameter_layout(shape)) {
    const double fan_out = static_cast<double>(dims[0]);
    const double fan_in = dims.size() == 2 ? static_cast<double>(dims[1]) : 1.0;
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor t(dims);
    for (double& v : t.values()) v = rng.uniform(-a, a);
    list.push_back({name, std::move(t)});
  }
  return from_list(shape, std::move(list));
}

ModelParameters ModelParameters::from_list(const ModelShape& shape, std::vector<Parameter> list) {
  const auto layout = parameter_layout(shape);
  if (layout.size() != list.size()) {
    throw std::invalid_argument("ModelParameters: expected " + std::to_string(layout.size()) + " parameters, got " +
                                std::to_string(list.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (list[i].name != layout[i].first || list[i].value.shape() != layout[i].second) {
      throw std::invalid_argument("ModelParameters: parameter " + std::to_string(i) + " is '" + list[i].name + "' " +
                                  shape_string(list[i].value.shape()) + ", expected '" + layout[i].first + "' " +
                                  shape_string(layout[i].second));
    }
  }
  ModelParameters p;
  p.shape_ = shape;
  p.list_ = std::move(list);
  p.build_index();
  return p;
}

void ModelParameters::build_index() {
  index_.clear();
  for (std::size_t i = 0; i < list_.size(); ++i) index_.emplace(list_[i].name, i);
}

std::size_t ModelParameters::index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("ModelParameters: no parameter '" + name + "'");
  return it->second;
}

std::optional<std::size_t> ModelParameters::projection_index(NodeRole role) const {
  auto it = index_.find(projection_name(role));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ModelParameters::relation_index(int layer, Relation r) const { return index(relation_name_for(layer, r)); }
std::size_t ModelParameters::self_index(int layer) const { return index(self_name(layer)); }
std::size_t ModelParameters::classifier_index() const { return index(kClassifierName); }

BoundParameters bind(Tape& tape, const ModelParameters& params, bool trainable) {
  BoundParameters b;
  b.params = &params;
  b.vars.reserve(params.list().size());
  for (const auto& p : params.list()) b.vars.push_back(trainable ? tape.leaf(p.value) : tape.constant(p.value));
  return b;
}

EncodedVars encode(Tape& tape, const DocumentGraph& graph, const BoundParameters& bound) {
  const ModelParameters& params = *bound.params;
  const ModelShape& shape = params.shape();
  if (graph.config != shape.graph) {
    throw std::invalid_argument("encode: graph ablation config does not match the model's");
  }

  // Node order in the graph is role-blocked, so the input matrix is the
  // concatenation of one projected block per present role.
  std::vector<Var> blocks;
  for (NodeRole role : present_roles(shape.graph)) {
    const Tensor& feats = graph.features_of(role);
    if (feats.rank() != 2 || feats.cols() != shape.input.of(role)) {
      throw std::invalid_argument("encode: " + std::string(role_name(role)) + " node embeddings have width " +
                                  std::to_string(feats.rank() == 2 ? feats.cols() : 0) + ", model expects " +
                                  std::to_string(shape.input.of(role)));
    }
    Var x = tape.constant(feats);
    if (auto idx = params.projection_index(role)) x = tape.matmul_nt(x, bound[*idx]);
    blocks.push_back(x);
  }
  Var h = tape.concat_rows(blocks);
  const Var inputs = h;

  const auto relations = active_relations(shape.graph);
  std::vector<std::vector<std::vector<std::size_t>>> neighbors;
  for (Relation r : relations) neighbors.push_back(graph.in_neighbors(r));

  for (int layer = 1; layer <= 2; ++layer) {
    Var acc = tape.matmul_nt(h, bound[params.self_index(layer)]);
    for (std::size_t k = 0; k < relations.size(); ++k) {
      bool any = false;
      for (const auto& list : neighbors[k]) any = any || !list.empty();
      if (!any) continue;
      Var agg = tape.neighbor_mean(h, neighbors[k]);
      acc = tape.add(acc, tape.matmul_nt(agg, bound[params.relation_index(layer, relations[k])]));
    }
    h = tape.relu(acc);
  }
  return {inputs, h};
}

Encoded encode(const DocumentGraph& graph, const ModelParameters& params) {
  Tape tape;
  const BoundParameters bound = bind(tape, params, false);
  const EncodedVars v = encode(tape, graph, bound);
  return {tape.value(v.inputs), tape.value(v.hidden)};
}

}  // namespace stack_order
