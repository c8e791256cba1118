#include "lead/distill/objective.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "lead/error.hpp"
#include "lead/numcore/ops.hpp"

namespace lead::distill {

using model::Encoding;
using model::RetrievalModel;
using model::Variant;

namespace {

struct BatchEncodings {
  std::vector<Encoding> queries;               // DE/CB only
  std::vector<std::vector<Encoding>> pool;     // DE/CB: own passages; CE: (q, p) pairs
};

BatchEncodings encode_batch(const RetrievalModel& m, const Batch& batch) {
  BatchEncodings enc;
  enc.pool.resize(batch.examples.size());
  const bool joint = m.variant() == Variant::CrossEncoder;
  if (!joint) enc.queries.reserve(batch.examples.size());
  for (std::size_t e = 0; e < batch.examples.size(); ++e) {
    const TrainExample& ex = batch.examples[e];
    if (!joint) enc.queries.push_back(m.encode_query(ex.query));
    enc.pool[e].reserve(ex.pool_size());
    for (std::size_t s = 0; s < ex.pool_size(); ++s) {
      enc.pool[e].push_back(joint ? m.encode_pair(ex.query, ex.pool_at(s).tokens)
                                  : m.encode_passage(ex.pool_at(s).tokens));
    }
  }
  return enc;
}

std::vector<const Encoding*> pool_for(const BatchEncodings& enc, const Batch& batch, std::size_t e,
                                      bool in_batch) {
  std::vector<const Encoding*> out;
  for (const auto& x : enc.pool[e]) out.push_back(&x);
  if (in_batch && e < batch.in_batch.size()) {
    for (const PoolRef& r : batch.in_batch[e]) out.push_back(&enc.pool[r.example][r.slot]);
  }
  return out;
}

num::Tensor hard_term(const num::Tensor& logits, std::size_t positives) {
  num::Tensor lp = num::log_softmax(logits, 1.0);
  num::Tensor acc = num::element(lp, 0);
  for (std::size_t i = 1; i < positives; ++i) acc = num::add(acc, num::element(lp, i));
  return num::scale(acc, -1.0);
}

// KL(target ‖ other) between tempered distributions of two logit rows.
num::Tensor kl_term(const num::Tensor& target_logits, const num::Tensor& other_logits,
                    const DistillConfig& cfg) {
  if (cfg.tau_placement == TauPlacement::Literal) {
    return num::scale(num::kl_from_log(num::log_softmax(target_logits, 1.0),
                                       num::log_softmax(other_logits, 1.0)),
                      1.0 / cfg.tau);
  }
  return num::kl_from_log(num::log_softmax(target_logits, cfg.tau),
                          num::log_softmax(other_logits, cfg.tau));
}

std::vector<double> weights_from_logits(const std::vector<num::Tensor>& teacher_logits,
                                        double tau) {
  // −KL(y ‖ t_i) = log t_i[gold] with the label on slot 0.
  std::vector<double> z(teacher_logits.size());
  for (std::size_t i = 0; i < teacher_logits.size(); ++i) {
    z[i] = num::log_softmax(teacher_logits[i].detach(), tau).values()[0] / tau;
  }
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) s += (v = std::exp(v - m));
  for (double& v : z) v /= s;
  return z;
}

}  // namespace

FeatureAligner FeatureAligner::create(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(in_dim)));
  std::vector<double> w(in_dim * out_dim);
  for (double& x : w) x = dist(rng);
  return {num::Tensor::parameter({in_dim, out_dim}, std::move(w)),
          num::Tensor::parameter({1, out_dim}, std::vector<double>(out_dim, 0.0))};
}

Batch make_batch(std::vector<TrainExample> examples) {
  Batch b;
  b.in_batch.resize(examples.size());
  b.examples = std::move(examples);
  return b;
}

Objective build_objective(const RetrievalModel* teacher, const RetrievalModel& student,
                          const Batch& batch, const DistillConfig& cfg, Method method,
                          const LayerSelection& selection, const WeightTable* fixed_weights,
                          const FeatureAligner* aligner) {
  if (batch.examples.empty()) throw InvalidInput("empty batch");
  if (!(cfg.tau > 0.0)) throw InvalidParameter("temperature must be positive");
  for (const auto& ex : batch.examples) ex.validate();
  const bool needs_teacher = method != Method::StudentOnly;
  if (needs_teacher && student.variant() == Variant::CrossEncoder) {
    throw InvalidInput("a distilled student must be an embedding model (DE or CB)");
  }
  if (needs_teacher && teacher == nullptr) throw InvalidInput("method requires a teacher model");
  if (method == Method::Feature && aligner == nullptr) {
    throw InvalidInput("feature baseline requires an alignment map");
  }
  const bool use_lyr = method == Method::Layerwise && cfg.layer_loss_scale != 0.0;
  const bool use_rep =
      (method == Method::Layerwise || method == Method::Response) && cfg.response_loss_scale != 0.0;
  const bool use_fd = method == Method::Feature && cfg.feature_loss_scale != 0.0;
  const bool use_tch = needs_teacher && cfg.joint_training;

  const bool in_batch = cfg.in_batch_negatives && student.variant() != Variant::CrossEncoder &&
                        (teacher == nullptr || teacher->variant() != Variant::CrossEncoder);

  if (use_lyr) {
    if (selection.teacher.size() != selection.student.size() || selection.teacher.empty()) {
      throw InvalidInput("layer selection lists must be non-empty and equally long");
    }
    if (fixed_weights && fixed_weights->size() != batch.examples.size()) {
      throw InvalidInput("fixed weight table does not cover the batch");
    }
  }

  // Layers each side must score.
  std::vector<int> t_layers;
  std::vector<int> s_layers{student.effective_layers()};
  if (use_lyr) {
    t_layers = selection.teacher;
    s_layers.insert(s_layers.end(), selection.student.begin(), selection.student.end());
  }
  if (teacher && (use_rep || use_tch)) t_layers.push_back(teacher->effective_layers());
  auto uniq = [](std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(t_layers);
  uniq(s_layers);

  BatchEncodings s_enc = encode_batch(student, batch);
  BatchEncodings t_enc;
  if (teacher && (!t_layers.empty() || use_fd)) t_enc = encode_batch(*teacher, batch);

  const std::size_t n = batch.examples.size();
  Objective out;
  out.weights.resize(n);
  num::Tensor total_sum;
  auto accumulate = [&](num::Tensor& acc, const num::Tensor& t) {
    acc = acc.defined() ? num::add(acc, t) : t;
  };
  double sum_lyr = 0.0, sum_rep = 0.0, sum_tch = 0.0, sum_stu = 0.0, sum_fd = 0.0;
  std::vector<double> sum_w(use_lyr ? selection.teacher.size() : 0, 0.0);

  for (std::size_t e = 0; e < n; ++e) {
    const TrainExample& ex = batch.examples[e];
    const auto s_pool = pool_for(s_enc, batch, e, in_batch);

    std::map<int, num::Tensor> s_logits;
    const Encoding* sq = student.variant() == Variant::CrossEncoder ? nullptr : &s_enc.queries[e];
    for (int l : s_layers) s_logits[l] = student.pool_scores(l, sq, s_pool);
    std::map<int, num::Tensor> t_logits;
    if (!t_layers.empty()) {
      const auto t_pool = pool_for(t_enc, batch, e, in_batch);
      const Encoding* tq = teacher->variant() == Variant::CrossEncoder ? nullptr : &t_enc.queries[e];
      for (int l : t_layers) {
        num::Tensor lg = teacher->pool_scores(l, tq, t_pool);
        t_logits[l] = cfg.joint_training ? lg : lg.detach();
      }
    }

    num::Tensor ex_total;
    const num::Tensor& s_top = s_logits.at(student.effective_layers());

    num::Tensor stu = hard_term(s_top, ex.positives.size());
    sum_stu += stu.item();
    accumulate(ex_total, stu);

    if (use_tch) {
      num::Tensor tch = hard_term(t_logits.at(teacher->effective_layers()), ex.positives.size());
      sum_tch += tch.item();
      accumulate(ex_total, tch);
    }

    if (use_rep) {
      const num::Tensor& t_top = t_logits.at(teacher->effective_layers());
      num::Tensor rep = kl_term(t_top, s_top, cfg);
      if (cfg.joint_training) rep = num::add(rep, kl_term(s_top, t_top, cfg));
      sum_rep += rep.item();
      accumulate(ex_total, cfg.response_loss_scale == 1.0 ? rep : num::scale(rep, cfg.response_loss_scale));
    }

    if (use_lyr) {
      const std::size_t k = selection.teacher.size();
      std::vector<double> w;
      if (fixed_weights) {
        w = (*fixed_weights)[e];
        if (w.size() != k) throw InvalidInput("fixed weights do not match the selection size");
      } else if (cfg.layer_reweighting) {
        std::vector<num::Tensor> tl;
        for (int a : selection.teacher) tl.push_back(t_logits.at(a));
        w = weights_from_logits(tl, cfg.tau);
      } else {
        w.assign(k, 1.0 / static_cast<double>(k));
      }
      num::Tensor lyr;
      for (std::size_t i = 0; i < k; ++i) {
        num::Tensor term = num::scale(
            kl_term(t_logits.at(selection.teacher[i]), s_logits.at(selection.student[i]), cfg), w[i]);
        accumulate(lyr, term);
        sum_w[i] += w[i];
      }
      sum_lyr += lyr.item();
      accumulate(ex_total, cfg.layer_loss_scale == 1.0 ? lyr : num::scale(lyr, cfg.layer_loss_scale));
      out.weights[e] = std::move(w);
    }

    if (use_fd) {
      const std::size_t top_s = static_cast<std::size_t>(student.effective_layers());
      const int top_t = teacher->effective_layers();
      auto align = [&](const num::Tensor& x) {
        return num::add_row(num::matmul(x, aligner->weight), aligner->bias);
      };
      auto target = [&](const num::Tensor& x) { return cfg.joint_training ? x : x.detach(); };
      num::Tensor s_q = num::row(s_enc.queries[e].at(static_cast<int>(top_s)), 0);
      num::Tensor fd;
      const std::size_t pool = ex.pool_size();
      if (teacher->variant() == Variant::CrossEncoder) {
        for (std::size_t p = 0; p < pool; ++p) {
          num::Tensor s_p = num::row(s_enc.pool[e][p].at(static_cast<int>(top_s)), 0);
          num::Tensor t_cls = target(num::row(t_enc.pool[e][p].at(top_t), 0));
          accumulate(fd, num::mse(align(num::concat_cols({s_q, s_p})), t_cls));
        }
        fd = num::scale(fd, 1.0 / static_cast<double>(pool));
      } else {
        num::Tensor t_q = target(num::row(t_enc.queries[e].at(top_t), 0));
        num::Tensor passages;
        for (std::size_t p = 0; p < pool; ++p) {
          num::Tensor s_p = num::row(s_enc.pool[e][p].at(static_cast<int>(top_s)), 0);
          num::Tensor t_p = target(num::row(t_enc.pool[e][p].at(top_t), 0));
          accumulate(passages, num::mse(align(s_p), t_p));
        }
        fd = num::add(num::mse(align(s_q), t_q), num::scale(passages, 1.0 / static_cast<double>(pool)));
      }
      sum_fd += fd.item();
      accumulate(ex_total, cfg.feature_loss_scale == 1.0 ? fd : num::scale(fd, cfg.feature_loss_scale));
    }

    accumulate(total_sum, ex_total);
  }

  const double inv = 1.0 / static_cast<double>(n);
  out.total = num::scale(total_sum, inv);
  LossBreakdown& b = out.breakdown;
  b.l_lyr = sum_lyr * inv;
  b.l_rep = sum_rep * inv;
  b.l_tch = sum_tch * inv;
  b.l_stu = sum_stu * inv;
  b.l_fd = sum_fd * inv;
  b.total = out.total.item();
  for (double& w : sum_w) w *= inv;
  b.weights = std::move(sum_w);
  return out;
}

}  // namespace lead::distill
