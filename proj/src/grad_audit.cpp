#include "seb/grad_audit.hpp"

#include <algorithm>
#include <memory>

#include "seb/attention.hpp"
#include "seb/error.hpp"
#include "seb/gnn.hpp"
#include "seb/grad_check.hpp"
#include "seb/model.hpp"
#include "seb/rng.hpp"
#include "seb/s3im.hpp"
#include "seb/training.hpp"

namespace seb {

namespace {

constexpr double kElementwiseTol = 1e-6;
constexpr double kComposedTol = 1e-4;

Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Tensor t({rows, cols});
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

// Scalar readout sum(y .* R) with a fixed random R, so every output entry
// carries a distinct weight.
ad::Var readout(ad::Var y, const Tensor& R) { return ad::sum(ad::mul(y, y.graph().constant(R))); }

struct Tracker {
  double max_error = 0.0;
  std::string worst;

  void add(const GradCheckResult& r, const std::string& where) {
    if (r.max_relative_error >= max_error) {
      max_error = r.max_relative_error;
      worst = where + " index " + std::to_string(r.worst_index) + " analytic " + std::to_string(r.analytic) +
              " numeric " + std::to_string(r.numeric);
    }
  }
};

std::vector<Param*> collect(const std::function<void(const ParamVisitor&)>& visit) {
  std::vector<Param*> out;
  visit([&](const std::string&, Param& p) { out.push_back(&p); });
  return out;
}

void check_input(Tracker& tr, const ScalarFn& f, const Tensor& x, const std::string& where) {
  tr.add(grad_check(f, x), where + " input");
}

void check_params(Tracker& tr, const LossFn& f, std::vector<Param*> params, const std::string& where) {
  tr.add(grad_check_params(f, params), where + " params");
}

TemporalGraph random_graph(std::size_t users, std::size_t batteries, Rng& rng) {
  TemporalGraph g(users, batteries, 1);
  for (std::uint32_t u = 0; u < users; ++u) {
    for (std::uint32_t b = 0; b < batteries; ++b) {
      if (rng.uniform() < 0.45) g.add_edge({NodeRef::user(u), NodeRef::battery(b), 0, 0});
    }
  }
  return g;
}

void audit_point(const std::string& op, Rng& rng, Tracker& tr) {
  if (op == "softmax") {
    const Tensor R = random_tensor(3, 5, rng);
    check_input(tr, [&](ad::Graph&, ad::Var x) { return readout(ad::softmax_rows(x), R); }, random_tensor(3, 5, rng, 2.0),
                op);
  } else if (op == "layer_norm") {
    const Tensor R = random_tensor(3, 6, rng);
    check_input(tr, [&](ad::Graph&, ad::Var x) { return readout(ad::layer_norm_rows(x), R); },
                random_tensor(3, 6, rng), op);
  } else if (op == "mse") {
    const Tensor target = random_tensor(5, 1, rng);
    check_input(tr, [&](ad::Graph&, ad::Var x) { return ad::mse(x, target); }, random_tensor(5, 1, rng), op);
  } else if (op == "gcn") {
    const TemporalGraph g = random_graph(3, 3, rng);
    GcnLayer layer(4, 3, rng.uniform() < 0.5 ? Activation::ReLU : Activation::Identity, rng);
    layer.B.value = random_tensor(4, 3, rng);
    const Tensor H = random_tensor(6, 4, rng);
    const Tensor R = random_tensor(6, 3, rng);
    check_input(tr, [&](ad::Graph&, ad::Var h) { return readout(gcn_layer_forward(layer, h, g.snapshot(0)), R); }, H,
                op);
    check_params(tr, [&](ad::Graph& gr) { return readout(gcn_layer_forward(layer, gr.constant(H), g.snapshot(0)), R); },
                 collect([&](const ParamVisitor& v) { layer.visit("gcn", v); }), op);
  } else if (op == "qkv") {
    AttentionHead head(4, 3, 2, rng);
    const Tensor X = random_tensor(5, 4, rng);
    const Tensor Rq = random_tensor(5, 3, rng), Rk = random_tensor(5, 3, rng), Rv = random_tensor(5, 2, rng);
    auto f = [&](ad::Var x) {
      const Qkv q = project_qkv(head, x);
      const ad::Var parts[] = {readout(q.Q, Rq), readout(q.K, Rk), readout(q.V, Rv)};
      return ad::sum(ad::concat_cols(parts));
    };
    check_input(tr, [&](ad::Graph&, ad::Var x) { return f(x); }, X, op);
    check_params(tr, [&](ad::Graph& g) { return f(g.constant(X)); },
                 collect([&](const ParamVisitor& v) { head.visit("head", v); }), op);
  } else if (op == "attention") {
    const Tensor Q = random_tensor(4, 3, rng), K = random_tensor(4, 3, rng), V = random_tensor(4, 2, rng);
    const Tensor R = random_tensor(4, 2, rng);
    check_input(tr, [&](ad::Graph& g, ad::Var q) { return readout(attend(q, g.constant(K), g.constant(V)), R); }, Q,
                op + " Q");
    check_input(tr, [&](ad::Graph& g, ad::Var k) { return readout(attend(g.constant(Q), k, g.constant(V)), R); }, K,
                op + " K");
    check_input(tr, [&](ad::Graph& g, ad::Var v) { return readout(attend(g.constant(Q), g.constant(K), v), R); }, V,
                op + " V");
  } else if (op == "mlp") {
    MlpHead head({5, 4, 1}, rng);
    for (Dense& d : head.layers) d.b.value = random_tensor(1, d.out(), rng, 0.5);
    const Tensor X = random_tensor(3, 5, rng);
    const Tensor R = random_tensor(3, 1, rng);
    check_input(tr, [&](ad::Graph&, ad::Var x) { return readout(mlp_forward(head, x), R); }, X, op);
    check_params(tr, [&](ad::Graph& g) { return readout(mlp_forward(head, g.constant(X)), R); },
                 collect([&](const ParamVisitor& v) { head.visit("mlp", v); }), op);
  } else if (op == "block") {
    TransformerBlock block(4, 3, 4, 5, BlockOptions{}, rng);
    block.norm1_bias.value = random_tensor(1, 4, rng, 0.3);
    const Tensor X = random_tensor(5, 4, rng);
    const Tensor R = random_tensor(5, 4, rng);
    check_input(tr, [&](ad::Graph&, ad::Var x) { return readout(encode_sequence(block, x), R); }, X, op);
    check_params(tr, [&](ad::Graph& g) { return readout(encode_sequence(block, g.constant(X)), R); },
                 collect([&](const ParamVisitor& v) { block.visit("block", v); }), op);
  } else if (op == "s3im") {
    const std::size_t n = 2 + rng.below(15);
    const Tensor target = random_tensor(n, 1, rng, 3.0);
    S3imConfig cfg;
    cfg.L = 5.0;
    check_input(tr, [&](ad::Graph&, ad::Var x) { return s3im_regularizer(x, target, cfg); }, random_tensor(n, 1, rng, 3.0),
                op);
  } else if (op == "model") {
    ModelConfig mc;
    mc.seq_len = 8;
    mc.features = 3;
    mc.d_model = mc.d_qk = mc.d_v = 4;
    mc.ffn_hidden = 6;
    mc.gnn_dim = 3;
    mc.mlp_hidden = 5;
    mc.flat_hidden = 5;
    Dataset data;
    data.graph = TemporalGraph(3, 3, 1);
    for (std::uint32_t i = 0; i < 3; ++i) {
      Order o;
      o.id = i;
      o.user = NodeRef::user(i);
      o.battery = NodeRef::battery((i + 1) % 3);
      o.t = 0;
      o.telemetry = random_tensor(mc.seq_len, mc.features, rng);
      o.label = 2.0 + rng.uniform();
      data.graph.add_edge({o.user, o.battery, 0, 0});
      data.orders.push_back(o);
    }
    data.graph.add_edge({NodeRef::user(0), NodeRef::battery(0), 0, 0});
    auto model = make_model(ModelKind::SebS3im, mc, 3, 3, rng.next_u64());
    model->visit_params([&](const std::string&, Param& p) {
      if (p.value.rows() == 1 || p.value.rows() == 3) p.value = random_tensor(p.value.rows(), p.value.cols(), rng, 0.3);
    });
    std::vector<const Order*> bucket;
    Tensor y({data.orders.size(), 1});
    for (std::size_t i = 0; i < data.orders.size(); ++i) {
      bucket.push_back(&data.orders[i]);
      y[i] = data.orders[i].label;
    }
    ObjectiveConfig obj{true, 1.0, S3imConfig{}};
    obj.s3im.L = 1.0;
    check_params(tr,
                 [&](ad::Graph& g) { return objective_term(model->forward_bucket(g, bucket, data.graph, 0), y, obj); },
                 model->trainable_params(), op);
  } else {
    throw ConfigError("unknown gradient-audit op '" + op + "'");
  }
}

}  // namespace

std::vector<std::string> audit_ops() {
  return {"softmax", "layer_norm", "mse", "gcn", "qkv", "attention", "mlp", "block", "s3im", "model"};
}

double default_tolerance(const std::string& op) {
  return op == "model" || op == "block" ? kComposedTol : kElementwiseTol;
}

AuditResult audit_op(const std::string& op, std::size_t points, std::uint64_t seed, std::optional<double> tolerance) {
  const auto ops = audit_ops();
  const auto pos = std::find(ops.begin(), ops.end(), op);
  if (pos == ops.end()) throw ConfigError("unknown gradient-audit op '" + op + "'");
  if (points == 0) throw ConfigError("gradient audit needs at least one point");
  AuditResult res;
  res.op = op;
  res.tolerance = tolerance.value_or(default_tolerance(op));
  res.points = points;
  Tracker tr;
  for (std::size_t i = 0; i < points; ++i) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(pos - ops.begin()), i);
    Tracker pt;
    audit_point(op, rng, pt);
    if (pt.max_error >= tr.max_error) {
      tr.max_error = pt.max_error;
      tr.worst = "point " + std::to_string(i) + " " + pt.worst;
    }
  }
  res.max_error = tr.max_error;
  res.worst = tr.worst;
  return res;
}

std::vector<AuditResult> run_grad_audit(const std::string& op, std::size_t points, std::uint64_t seed,
                                        std::optional<double> tolerance) {
  std::vector<AuditResult> out;
  if (op == "all") {
    for (const std::string& o : audit_ops()) out.push_back(audit_op(o, points, seed, tolerance));
  } else {
    out.push_back(audit_op(op, points, seed, tolerance));
  }
  return out;
}

}  // namespace seb
