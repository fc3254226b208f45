#include "dsattn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <thread>

#include "dsattn/linalg.hpp"
#include "dsattn/maskgen.hpp"

namespace dsattn {

MaskKind mask_kind_from_string(const std::string& s) {
    if (s == "none") return MaskKind::none;
    if (s == "predicted") return MaskKind::predicted;
    if (s == "oracle") return MaskKind::oracle;
    if (s == "random") return MaskKind::random;
    if (s == "local") return MaskKind::local;
    throw ConfigError("unknown mask kind: " + s);
}

const char* mask_kind_name(MaskKind k) {
    switch (k) {
        case MaskKind::none: return "none";
        case MaskKind::predicted: return "predicted";
        case MaskKind::oracle: return "oracle";
        case MaskKind::random: return "random";
        case MaskKind::local: return "local";
    }
    return "?";
}

TrainSchedule schedule_from_string(const std::string& s) {
    if (s == "dense-pretrain") return TrainSchedule::dense_pretrain;
    if (s == "adapt-finetune") return TrainSchedule::adapt_finetune;
    if (s == "from-scratch-two-phase") return TrainSchedule::from_scratch_two_phase;
    throw ConfigError("unknown schedule: " + s);
}

const char* schedule_name(TrainSchedule s) {
    switch (s) {
        case TrainSchedule::dense_pretrain: return "dense-pretrain";
        case TrainSchedule::adapt_finetune: return "adapt-finetune";
        case TrainSchedule::from_scratch_two_phase: return "from-scratch-two-phase";
    }
    return "?";
}

size_t keep_per_row(size_t l, double sparsity) {
    if (sparsity < 0.0 || sparsity >= 1.0) throw ParamError("sparsity must be in [0, 1)");
    const auto keep =
        static_cast<size_t>(std::ceil((1.0 - sparsity) * static_cast<double>(l)));
    return std::clamp<size_t>(keep, 1, l);
}

namespace {

struct BoundParams {
    std::vector<ad::Var> vars;  // parallel to model.params()
};

BoundParams bind_params(ad::Tape& tape, ToyModel& model, bool train_model,
                        bool train_predictor) {
    BoundParams b;
    for (auto& p : model.params()) {
        const bool rg = p.predictor_path ? train_predictor : train_model;
        b.vars.push_back(tape.input(p.value, rg));
    }
    return b;
}

struct LayerVars {
    ad::Var ln1_g, ln1_b, wo, ln2_g, ln2_b, w1, b1, w2, b2;
    std::vector<ad::Var> wq, wk, wv, pwq, pwk;
};

struct ModelVars {
    ad::Var emb, pos, lnf_g, lnf_b, head_w, head_b;
    std::vector<LayerVars> layers;
};

ModelVars collect_vars(const ToyModel& model, const BoundParams& b) {
    ModelVars mv;
    auto at = [&](const std::string& name) { return b.vars[model.param_index(name)]; };
    mv.emb = at("emb");
    mv.pos = at("pos");
    mv.lnf_g = at("lnf.g");
    mv.lnf_b = at("lnf.b");
    mv.head_w = at("head.w");
    mv.head_b = at("head.b");
    const auto& cfg = model.config();
    for (size_t layer = 0; layer < cfg.layers; ++layer) {
        const std::string lp = "layer" + std::to_string(layer) + ".";
        LayerVars lv;
        lv.ln1_g = at(lp + "ln1.g");
        lv.ln1_b = at(lp + "ln1.b");
        lv.wo = at(lp + "wo");
        lv.ln2_g = at(lp + "ln2.g");
        lv.ln2_b = at(lp + "ln2.b");
        lv.w1 = at(lp + "ffn.w1");
        lv.b1 = at(lp + "ffn.b1");
        lv.w2 = at(lp + "ffn.w2");
        lv.b2 = at(lp + "ffn.b2");
        for (size_t h = 0; h < cfg.heads; ++h) {
            const std::string hp = lp + "h" + std::to_string(h) + ".";
            lv.wq.push_back(at(hp + "wq"));
            lv.wk.push_back(at(hp + "wk"));
            lv.wv.push_back(at(hp + "wv"));
            lv.pwq.push_back(at(hp + "pred.wq"));
            lv.pwk.push_back(at(hp + "pred.wk"));
        }
        mv.layers.push_back(std::move(lv));
    }
    return mv;
}

}  // namespace

BatchResult forward_batch(ad::Tape& tape, ToyModel& model, const TaskSpec& spec,
                          const std::vector<const Sample*>& batch, const ForwardOptions& opts) {
    if (batch.empty()) throw ParamError("forward_batch: empty batch");
    const ModelConfig& cfg = model.config();
    const size_t l = cfg.seq_len;
    if (spec.l != l || spec.vocab != cfg.vocab)
        throw ShapeError("forward_batch: task/model shape mismatch");
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg.d_head()));
    const size_t keep = keep_per_row(l, opts.sparsity);
    const bool need_pred = (opts.dsa && opts.mask_kind == MaskKind::predicted &&
                            opts.mask_override == nullptr) ||
                           opts.lambda != 0.0 || opts.collect_stats;
    QuantSpec quant{opts.bits_override >= 0 ? opts.bits_override : cfg.pred_bits};

    BatchResult res;
    BoundParams bound = bind_params(tape, model, opts.train_model, opts.train_predictor);
    res.bound = bound.vars;
    ModelVars mv = collect_vars(model, bound);

    std::vector<ad::Var> proj_vars;
    for (const auto& proj : model.projections())
        proj_vars.push_back(tape.constant(proj->p));

    SparseMask local_mask;
    if (opts.dsa && opts.mask_kind == MaskKind::local) local_mask = local_window_mask(l, keep);

    ad::Var ce_sum, mse_sum;
    std::vector<double> pred_acc_acc(cfg.layers, 0.0);
    double rel_fro_acc = 0.0, mse_stat_acc = 0.0;
    size_t rel_fro_n = 0;
    size_t dropped = 0, dropped_total = 0;
    if (opts.capture_masks)
        res.stats.masks.assign(cfg.layers, std::vector<SparseMask>(cfg.heads));

    for (const Sample* sample : batch) {
        if (sample->tokens.size() != l) throw ShapeError("forward_batch: sample length != l");
        ad::Var x = tape.add(tape.embedding(mv.emb, sample->tokens), mv.pos);
        ad::Var sample_mse;
        for (size_t layer = 0; layer < cfg.layers; ++layer) {
            LayerVars& lv = mv.layers[layer];
            ad::Var h = tape.layer_norm(x, lv.ln1_g, lv.ln1_b);
            ad::Var r;
            if (need_pred) r = tape.matmul(h, proj_vars[layer]);
            std::vector<ad::Var> head_outputs;
            ad::Var layer_mse;
            for (size_t hd = 0; hd < cfg.heads; ++hd) {
                ad::Var q = tape.matmul(h, lv.wq[hd]);
                ad::Var k = tape.matmul(h, lv.wk[hd]);
                ad::Var v = tape.matmul(h, lv.wv[hd]);
                ad::Var s_raw = tape.matmul_nt(q, k);  // unscaled; Eq.-6 target
                ad::Var s = cfg.scale_scores ? tape.scale(s_raw, inv_sqrt_dk) : s_raw;
                ad::Var s_tilde;
                if (need_pred) {
                    ad::Var qt = tape.quantize_ste(tape.matmul(r, lv.pwq[hd]), quant);
                    ad::Var kt = tape.quantize_ste(tape.matmul(r, lv.pwk[hd]), quant);
                    s_tilde = tape.matmul_nt(qt, kt);
                    if (opts.lambda != 0.0 || opts.collect_stats) {
                        ad::Var head_mse = tape.mse_fro(s_raw, s_tilde, 1.0);
                        layer_mse = layer_mse.valid() ? tape.add(layer_mse, head_mse) : head_mse;
                    }
                }
                // mask selection is a constant of the forward pass
                SparseMask mask;
                bool use_mask = false;
                if (opts.dsa) {
                    use_mask = true;
                    if (opts.mask_override) {
                        mask = (*opts.mask_override)[layer][hd];
                    } else {
                        switch (opts.mask_kind) {
                            case MaskKind::predicted:
                                mask = predicted_topk_mask(tape.value(s_tilde), keep);
                                break;
                            case MaskKind::oracle:
                                mask = oracle_topk_mask(tape.value(s_raw), keep);
                                break;
                            case MaskKind::random:
                                if (!opts.mask_rng)
                                    throw ParamError("forward_batch: random masks need rng");
                                mask = random_mask(l, keep, *opts.mask_rng);
                                break;
                            case MaskKind::local: mask = local_mask; break;
                            case MaskKind::none: use_mask = false; break;
                        }
                    }
                    if (use_mask && keep >= l) use_mask = false;  // sparsity 0: dense path
                }
                if (opts.collect_stats && need_pred && s_tilde.valid()) {
                    SparseMask pm = predicted_topk_mask(tape.value(s_tilde), keep);
                    SparseMask om = oracle_topk_mask(tape.value(s_raw), keep);
                    pred_acc_acc[layer] += prediction_accuracy(pm, om);
                    const double dn =
                        frobenius_norm(sub(tape.value(s_raw), tape.value(s_tilde)));
                    const double sn = frobenius_norm(tape.value(s_raw));
                    mse_stat_acc += dn * dn / static_cast<double>(cfg.heads);
                    if (sn > 0) {
                        rel_fro_acc += dn / sn;
                        ++rel_fro_n;
                    }
                }
                if (opts.capture_masks && use_mask) res.stats.masks[layer][hd] = mask;
                ad::Var a = use_mask
                                ? tape.softmax_rows_masked(s, mask, cfg.mask_constant)
                                : tape.softmax_rows(s);
                if (opts.drop_threshold >= 0.0) {
                    // Table-1 style literal dropping: zero small weights, no
                    // renormalization. Eval-only path (no gradient support).
                    const Matrix& av = tape.value(a);
                    Matrix kept_m(av.rows(), av.cols(), av.precision());
                    for (size_t i = 0; i < av.size(); ++i) {
                        const bool keep_w = av.data()[i] >= opts.drop_threshold;
                        kept_m.raw()[i] = keep_w ? av.data()[i] : 0.0;
                        dropped += !keep_w;
                    }
                    dropped_total += av.size();
                    a = tape.constant(std::move(kept_m));
                }
                head_outputs.push_back(tape.matmul(a, v));
            }
            if (layer_mse.valid()) {
                ad::Var agg = cfg.mse_mean_over_heads
                                  ? tape.scale(layer_mse, 1.0 / static_cast<double>(cfg.heads))
                                  : layer_mse;
                sample_mse = sample_mse.valid() ? tape.add(sample_mse, agg) : agg;
            }
            ad::Var z = cfg.heads == 1 ? head_outputs[0] : tape.concat_cols(head_outputs);
            x = tape.add(x, tape.matmul(z, lv.wo));
            ad::Var h2 = tape.layer_norm(x, lv.ln2_g, lv.ln2_b);
            ad::Var f = tape.tanh_act(tape.add_row_broadcast(tape.matmul(h2, lv.w1), lv.b1));
            x = tape.add(x, tape.add_row_broadcast(tape.matmul(f, lv.w2), lv.b2));
        }
        if (sample_mse.valid() && cfg.mse_mean_over_layers)
            sample_mse = tape.scale(sample_mse, 1.0 / static_cast<double>(cfg.layers));
        ad::Var xf = tape.layer_norm(x, mv.lnf_g, mv.lnf_b);
        ad::Var readout = tape.row(xf, sample->marker_pos);
        ad::Var logits =
            tape.add_row_broadcast(tape.matmul(readout, mv.head_w), mv.head_b);
        res.logits_last = logits;
        const Matrix& lg = tape.value(logits);
        uint32_t best = 0;
        for (size_t j = 1; j < lg.cols(); ++j)
            if (lg(0, j) > lg(0, best)) best = static_cast<uint32_t>(j);
        res.predictions.push_back(best);
        ad::Var ce = tape.cross_entropy(logits, sample->label);
        ce_sum = ce_sum.valid() ? tape.add(ce_sum, ce) : ce;
        if (sample_mse.valid())
            mse_sum = mse_sum.valid() ? tape.add(mse_sum, sample_mse) : sample_mse;
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    ad::Var ce_mean = tape.scale(ce_sum, inv_b);
    res.breakdown.model_loss = tape.scalar(ce_mean);
    res.breakdown.lambda = opts.lambda;
    ad::Var total = ce_mean;
    if (mse_sum.valid()) {
        ad::Var mse_mean = tape.scale(mse_sum, inv_b);  // Eq. 6: 1/B
        res.breakdown.mse_loss = tape.scalar(mse_mean);
        if (opts.lambda != 0.0) total = tape.add_scaled(ce_mean, mse_mean, opts.lambda);
    }
    res.breakdown.total = tape.scalar(total);
    res.loss = total;

    if (opts.collect_stats) {
        res.stats.pred_acc_per_layer.resize(cfg.layers, 0.0);
        const double denom = static_cast<double>(batch.size() * cfg.heads);
        for (size_t layer = 0; layer < cfg.layers; ++layer)
            res.stats.pred_acc_per_layer[layer] = pred_acc_acc[layer] / denom;
        res.stats.rel_fro = rel_fro_n ? rel_fro_acc / static_cast<double>(rel_fro_n) : -1.0;
        res.stats.mse = mse_stat_acc * inv_b;
    }
    if (dropped_total > 0)
        res.stats.dropped_fraction =
            static_cast<double>(dropped) / static_cast<double>(dropped_total);
    return res;
}

void adam_step(ToyModel& model, ad::Tape& tape, const std::vector<ad::Var>& bound,
               const AdamConfig& model_cfg, const AdamConfig& pred_cfg, size_t t) {
    std::vector<Matrix> grads(model.params().size());
    for (size_t i = 0; i < grads.size(); ++i)
        if (tape.has_grad(bound[i])) grads[i] = tape.grad(bound[i]);
    adam_step(model, grads, model_cfg, pred_cfg, t);
}

void adam_step(ToyModel& model, const std::vector<Matrix>& grads,
               const AdamConfig& model_cfg, const AdamConfig& pred_cfg, size_t t) {
    auto& params = model.params();
    for (size_t i = 0; i < params.size(); ++i) {
        Parameter& p = params[i];
        if (grads[i].empty() && p.adam_m.empty()) continue;
        Matrix zero_g;
        if (grads[i].empty()) zero_g = Matrix::zeros(p.value.rows(), p.value.cols());
        const Matrix& g = grads[i].empty() ? zero_g : grads[i];
        const AdamConfig& cfg = p.predictor_path ? pred_cfg : model_cfg;
        if (p.adam_m.empty()) {
            p.adam_m = Matrix::zeros(p.value.rows(), p.value.cols());
            p.adam_v = Matrix::zeros(p.value.rows(), p.value.cols());
        }
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        for (size_t j = 0; j < g.size(); ++j) {
            const double gj = g.data()[j];
            double& m = p.adam_m.raw()[j];
            double& v = p.adam_v.raw()[j];
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * gj;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * gj * gj;
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            p.value.raw()[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        p.value.round_to_precision();
    }
}

StepResult train_step_compute(ToyModel& model, const TaskSpec& spec,
                              const std::vector<const Sample*>& batch,
                              const ForwardOptions& opts, size_t threads) {
    const size_t workers = std::max<size_t>(1, std::min(threads, batch.size()));
    // contiguous chunks; chunk boundaries depend only on batch size and the
    // configured worker count, so the reduction below is deterministic
    std::vector<std::vector<const Sample*>> chunks(workers);
    for (size_t i = 0; i < batch.size(); ++i)
        chunks[i * workers / batch.size()].push_back(batch[i]);
    // one mask stream per chunk, drawn up front on the calling thread
    std::vector<std::optional<Rng>> chunk_rngs(workers);
    if (opts.mask_rng)
        for (size_t t = 0; t < workers; ++t) chunk_rngs[t].emplace(opts.mask_rng->next_u64());

    struct WorkerOut {
        ad::Tape tape;
        BatchResult result;
    };
    std::vector<WorkerOut> outs(workers);
    auto run_chunk = [&](size_t t) {
        ForwardOptions local = opts;
        local.mask_rng = chunk_rngs[t] ? &*chunk_rngs[t] : nullptr;
        outs[t].result = forward_batch(outs[t].tape, model, spec, chunks[t], local);
        outs[t].tape.backward(outs[t].result.loss);
    };
    if (workers == 1) {
        run_chunk(0);
    } else {
        std::vector<std::thread> pool;
        for (size_t t = 1; t < workers; ++t) pool.emplace_back(run_chunk, t);
        run_chunk(0);
        for (auto& th : pool) th.join();
    }

    StepResult out;
    out.grads.resize(model.params().size());
    out.breakdown.lambda = opts.lambda;
    for (size_t t = 0; t < workers; ++t) {
        const double w =
            static_cast<double>(chunks[t].size()) / static_cast<double>(batch.size());
        const BatchResult& r = outs[t].result;
        out.breakdown.model_loss += w * r.breakdown.model_loss;
        out.breakdown.mse_loss += w * r.breakdown.mse_loss;
        out.breakdown.total += w * r.breakdown.total;
        if (opts.collect_stats) {
            if (out.stats.pred_acc_per_layer.empty())
                out.stats.pred_acc_per_layer.assign(r.stats.pred_acc_per_layer.size(), 0.0);
            for (size_t layer = 0; layer < out.stats.pred_acc_per_layer.size(); ++layer)
                out.stats.pred_acc_per_layer[layer] += w * r.stats.pred_acc_per_layer[layer];
            out.stats.rel_fro += w * r.stats.rel_fro;
            out.stats.mse += w * r.stats.mse;
        }
        for (size_t i = 0; i < out.grads.size(); ++i) {
            if (!outs[t].tape.has_grad(r.bound[i])) continue;
            const Matrix& g = outs[t].tape.grad(r.bound[i]);
            if (out.grads[i].empty()) out.grads[i] = Matrix::zeros(g.rows(), g.cols());
            for (size_t j = 0; j < g.size(); ++j) out.grads[i].raw()[j] += w * g.data()[j];
        }
    }
    return out;
}

namespace {

void reset_adam(ToyModel& model) {
    for (auto& p : model.params()) {
        p.adam_m = Matrix{};
        p.adam_v = Matrix{};
    }
}

std::vector<const Sample*> draw_batch(const ToyTask& task, size_t batch, Rng& rng) {
    std::vector<const Sample*> out;
    out.reserve(batch);
    for (size_t i = 0; i < batch; ++i)
        out.push_back(&task.samples[rng.uniform_int(task.samples.size())]);
    return out;
}

struct PhaseSpec {
    std::string name;
    size_t steps = 0;
    ForwardOptions opts;
    AdamConfig model_adam, pred_adam;
};

}  // namespace

EvalResult evaluate(ToyModel& model, const ToyTask& task, const EvalOptions& opts,
                    bool collect_stats) {
    Rng mask_rng(opts.mask_seed);
    EvalResult res;
    size_t correct = 0;
    std::vector<double> pred_acc;
    double rel_fro = 0.0, mse = 0.0, dropped = 0.0;
    size_t stat_batches = 0;
    const size_t chunk = 16;
    for (size_t begin = 0; begin < task.samples.size(); begin += chunk) {
        std::vector<const Sample*> batch;
        for (size_t i = begin; i < std::min(begin + chunk, task.samples.size()); ++i)
            batch.push_back(&task.samples[i]);
        ad::Tape tape(false);
        ForwardOptions fo;
        fo.dsa = opts.dsa;
        fo.mask_kind = opts.mask_kind;
        fo.sparsity = opts.sparsity;
        fo.lambda = 0.0;
        fo.train_model = false;
        fo.train_predictor = false;
        fo.bits_override = opts.bits_override;
        fo.mask_rng = &mask_rng;
        fo.collect_stats = collect_stats;
        fo.drop_threshold = opts.drop_threshold;
        BatchResult r = forward_batch(tape, model, task.spec, batch, fo);
        for (size_t i = 0; i < batch.size(); ++i)
            correct += r.predictions[i] == batch[i]->label;
        if (collect_stats) {
            if (pred_acc.empty()) pred_acc.assign(r.stats.pred_acc_per_layer.size(), 0.0);
            for (size_t layer = 0; layer < pred_acc.size(); ++layer)
                pred_acc[layer] += r.stats.pred_acc_per_layer[layer];
            rel_fro += r.stats.rel_fro;
            mse += r.stats.mse;
        }
        dropped += r.stats.dropped_fraction;
        ++stat_batches;
    }
    res.accuracy = static_cast<double>(correct) / static_cast<double>(task.samples.size());
    if (collect_stats && stat_batches) {
        for (double& v : pred_acc) v /= static_cast<double>(stat_batches);
        res.pred_acc_per_layer = pred_acc;
        res.rel_fro = rel_fro / static_cast<double>(stat_batches);
        res.mse = mse / static_cast<double>(stat_batches);
    }
    res.dropped_fraction = stat_batches ? dropped / static_cast<double>(stat_batches) : 0.0;
    return res;
}

TrainResult train(ToyModel& model, const ToyTask& train_task, const ToyTask& eval_task,
                  const TrainConfig& cfg) {
    Rng master(cfg.seed);
    Rng batch_rng = master.split(1);
    Rng mask_rng = master.split(2);

    std::vector<PhaseSpec> phases;
    auto make_opts = [&](bool dsa, bool train_model, bool train_predictor, double lambda) {
        ForwardOptions fo;
        fo.dsa = dsa;
        fo.mask_kind = cfg.mask_kind;
        fo.sparsity = cfg.sparsity;
        fo.lambda = lambda;
        fo.train_model = train_model;
        fo.train_predictor = train_predictor;
        fo.mask_rng = &mask_rng;
        fo.collect_stats = cfg.lambda != 0.0 || cfg.mask_kind == MaskKind::predicted;
        return fo;
    };

    switch (cfg.schedule) {
        case TrainSchedule::dense_pretrain: {
            PhaseSpec p;
            p.name = "dense";
            p.steps = cfg.steps;
            p.opts = make_opts(false, true, false, 0.0);
            p.opts.collect_stats = false;
            p.model_adam.lr = cfg.lr;
            p.pred_adam.lr = cfg.predictor_lr;
            phases.push_back(p);
            break;
        }
        case TrainSchedule::adapt_finetune: {
            if (cfg.phase1_steps > 0) {
                PhaseSpec w;
                w.name = "predictor-warmup";
                w.steps = cfg.phase1_steps;
                w.opts = make_opts(false, false, true, cfg.lambda != 0.0 ? cfg.lambda : 1.0);
                w.model_adam.lr = cfg.lr;
                w.pred_adam.lr = cfg.warmup_lr;
                phases.push_back(w);
            }
            PhaseSpec j;
            j.name = "joint";
            j.steps = cfg.steps;
            j.opts = make_opts(true, true, true, cfg.lambda);
            j.model_adam.lr = cfg.lr;
            j.pred_adam.lr = cfg.predictor_lr;
            phases.push_back(j);
            break;
        }
        case TrainSchedule::from_scratch_two_phase: {
            // phase 1 trains the original model densely with the predictor
            // frozen, phase 2 optimizes jointly under the sparse constraint
            PhaseSpec d;
            d.name = "dense-phase";
            d.steps = cfg.phase1_steps;
            d.opts = make_opts(false, true, false, 0.0);
            d.opts.collect_stats = false;
            d.model_adam.lr = cfg.lr;
            d.pred_adam.lr = cfg.predictor_lr;
            phases.push_back(d);
            PhaseSpec j;
            j.name = "joint";
            j.steps = cfg.steps;
            j.opts = make_opts(true, true, true, cfg.lambda);
            j.model_adam.lr = cfg.lr;
            j.pred_adam.lr = cfg.predictor_lr;
            phases.push_back(j);
            break;
        }
    }

    TrainResult result;
    size_t global_step = 0;
    for (const PhaseSpec& phase : phases) {
        reset_adam(model);
        for (size_t t = 1; t <= phase.steps; ++t) {
            ++global_step;
            std::vector<const Sample*> batch = draw_batch(train_task, cfg.batch, batch_rng);
            ForwardOptions step_opts = phase.opts;
            if (step_opts.collect_stats) {
                const size_t every = std::max<size_t>(1, cfg.stats_every);
                step_opts.collect_stats = (t % every == 0) || t == phase.steps;
            }
            StepResult r =
                train_step_compute(model, train_task.spec, batch, step_opts, cfg.threads);
            if (!std::isfinite(r.breakdown.total))
                throw DivergenceError("train: non-finite loss at step " +
                                      std::to_string(global_step));
            adam_step(model, r.grads, phase.model_adam, phase.pred_adam, t);

            MetricsRow row;
            row.step = global_step;
            row.phase = phase.name;
            row.model_loss = r.breakdown.model_loss;
            row.mse_loss = r.breakdown.mse_loss;
            row.total_loss = r.breakdown.total;
            if (!r.stats.pred_acc_per_layer.empty()) {
                double acc = 0.0;
                for (double a : r.stats.pred_acc_per_layer) acc += a;
                row.pred_acc = acc / static_cast<double>(r.stats.pred_acc_per_layer.size());
                row.rel_fro = r.stats.rel_fro;
            }
            if (cfg.eval_every != 0 && global_step % cfg.eval_every == 0) {
                EvalOptions eo;
                eo.dsa = phase.opts.dsa;
                eo.mask_kind = cfg.mask_kind;
                eo.sparsity = cfg.sparsity;
                row.eval_acc = evaluate(model, eval_task, eo).accuracy;
            }
            result.history.push_back(std::move(row));
        }
    }

    const bool final_dsa = phases.back().opts.dsa;
    EvalOptions eo;
    eo.dsa = final_dsa;
    eo.mask_kind = cfg.mask_kind;
    eo.sparsity = cfg.sparsity;
    const bool stats = cfg.mask_kind == MaskKind::predicted;
    EvalResult er = evaluate(model, eval_task, eo, stats);
    result.final_accuracy = er.accuracy;
    result.final_pred_acc_per_layer = er.pred_acc_per_layer;
    result.final_rel_fro = er.rel_fro;
    if (!result.history.empty()) {
        result.history.back().eval_acc = er.accuracy;
        if (!er.pred_acc_per_layer.empty()) {
            double acc = 0.0;
            for (double a : er.pred_acc_per_layer) acc += a;
            result.history.back().pred_acc =
                acc / static_cast<double>(er.pred_acc_per_layer.size());
        }
    }
    return result;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream f(path);
    if (!f) throw IoError("write_metrics_csv: cannot open " + path);
    f << "step,phase,model_loss,mse_loss,total_loss,eval_acc,pred_acc,rel_fro\n";
    f.precision(12);
    for (const auto& r : rows) {
        f << r.step << ',' << r.phase << ',' << r.model_loss << ',' << r.mse_loss << ','
          << r.total_loss << ',' << r.eval_acc << ',' << r.pred_acc << ',' << r.rel_fro
          << '\n';
    }
    if (!f) throw IoError("write_metrics_csv: write failed for " + path);
}

}  // namespace dsattn
