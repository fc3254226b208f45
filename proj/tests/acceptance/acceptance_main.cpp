// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code = number of failed
// criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "dsattn/attention.hpp"
#include "dsattn/costmodel.hpp"
#include "dsattn/dataflow.hpp"
#include "dsattn/linalg.hpp"
#include "dsattn/maskgen.hpp"
#include "dsattn/presets.hpp"
#include "dsattn/sparse.hpp"
#include "dsattn/trainer.hpp"

using namespace dsattn;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int criterion, bool pass, const std::string& detail, double secs) {
    std::printf("[%s] criterion %2d: %s (%.1fs)\n", pass ? "PASS" : "FAIL", criterion,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

template <typename Fn>
void run_criterion(int criterion, Fn&& fn) {
    Timer timer;
    try {
        auto [pass, detail] = fn();
        report(criterion, pass, detail, timer.seconds());
    } catch (const std::exception& e) {
        report(criterion, false, std::string("exception: ") + e.what(), timer.seconds());
    }
}

double median3(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[1];
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------- 1 & 2 ---

std::pair<bool, std::string> criterion_1_and_2(bool check_counters) {
    Rng rng(1001);
    const std::vector<double> sparsities = {0.0, 0.5, 0.9, 0.95, 0.99};
    double worst = 0.0;
    bool counters_ok = true;
    for (int inst = 0; inst < 200; ++inst) {
        const size_t l = 8 + rng.uniform_int(57);       // 8..64
        const size_t dk = 4 + rng.uniform_int(13);      // 4..16
        const size_t heads = size_t{1} << rng.uniform_int(3);  // 1,2,4
        const double sparsity = sparsities[inst % sparsities.size()];
        const size_t keep = keep_per_row(l, sparsity);
        AttentionParams p = random_attention_params(16, dk, dk, heads, rng);
        Matrix x = random_uniform(l, 16, -1.5, 1.5, rng);
        std::vector<SparseMask> masks;
        for (size_t h = 0; h < heads; ++h) masks.push_back(random_mask(l, keep, rng));
        op_counters().reset();
        Matrix zs = sparse_attention(x, p, masks);
        const uint64_t nnz = static_cast<uint64_t>(heads) * l * keep;
        if (check_counters) {
            costmodel::LayerShape shape{.l = l, .d = 16, .d_k = dk, .d_v = dk,
                                        .heads = heads, .ffn = 1, .proj_k = 1};
            if (op_counters().sddmm_mults + op_counters().spmm_mults !=
                costmodel::dsa_attention_macs_exact(shape, keep))
                counters_ok = false;
            if (op_counters().sddmm_mults != nnz * dk) counters_ok = false;
            if (op_counters().spmm_mults != nnz * dk) counters_ok = false;
            if (op_counters().softmax_exps != nnz) counters_ok = false;
        }
        Matrix zd = masked_attention(x, p, masks);
        worst = std::max(worst, max_abs_diff(zs, zd));
    }
    if (check_counters)
        return {counters_ok, "kernel counters equal cost-model formulas exactly, 200 instances"};
    return {worst <= 1e-4,
            "sparse vs dense Eq.-4 equivalence, 200 instances, max |diff| = " + fmt(worst)};
}

// -------------------------------------------------------------------- 3 ---

std::pair<bool, std::string> criterion_3() {
    Rng data_rng(42);
    ToyTask task = make_toy_task(8, 22, 4, data_rng);
    ModelConfig mc;
    mc.layers = 2;
    mc.d = 16;
    mc.heads = 2;
    mc.ffn = 32;
    mc.seq_len = 8;
    mc.vocab = 22;
    mc.sigma = 0.5;
    mc.precision = Precision::f64;
    size_t checked = 0, failed = 0;
    for (double lambda : {0.0, 0.01}) {
        ToyModel model(mc, 77);
        std::vector<const Sample*> batch = {&task.samples[0], &task.samples[1]};
        ForwardOptions capture;
        capture.dsa = true;
        capture.sparsity = 0.5;
        capture.lambda = lambda;
        capture.capture_masks = true;
        std::vector<std::vector<SparseMask>> masks;
        {
            ad::Tape t(false);
            masks = forward_batch(t, model, task.spec, batch, capture).stats.masks;
        }
        ForwardOptions fo;
        fo.dsa = true;
        fo.sparsity = 0.5;
        fo.lambda = lambda;
        fo.mask_override = &masks;
        ad::Tape tape;
        BatchResult r = forward_batch(tape, model, task.spec, batch, fo);
        tape.backward(r.loss);
        auto loss_at = [&]() {
            ad::Tape t(false);
            ForwardOptions f2 = fo;
            f2.train_model = false;
            f2.train_predictor = false;
            return forward_batch(t, model, task.spec, batch, f2).breakdown.total;
        };
        const double h = 1e-5;
        for (size_t pi = 0; pi < model.params().size(); ++pi) {
            Parameter& p = model.params()[pi];
            const Matrix& g = tape.grad(r.bound[pi]);
            for (size_t idx = 0; idx < p.value.size(); ++idx) {
                const double orig = p.value.data()[idx];
                p.value.raw()[idx] = orig + h;
                const double up = loss_at();
                p.value.raw()[idx] = orig - h;
                const double down = loss_at();
                p.value.raw()[idx] = orig;
                const double fd = (up - down) / (2 * h);
                const double an = g.data()[idx];
                ++checked;
                const double tol_scale = std::max({1.0, std::abs(fd), std::abs(an)});
                if (std::abs(fd - an) > 1e-4 * tol_scale) ++failed;
            }
        }
    }
    std::ostringstream ss;
    ss << "finite-difference gradcheck, " << checked << " entries over lambda {0, 0.01}, "
       << failed << " failures";
    return {failed == 0, ss.str()};
}

// ---------------------------------------------------------------- 4 & 5 ---

std::pair<bool, std::string> criterion_4() {
    costmodel::CostReport r2k = costmodel::layer_breakdown(presets::cost_shape("text-2k"), 0.9);
    costmodel::CostReport r4k = costmodel::layer_breakdown(presets::cost_shape("text"), 0.95);
    const bool pass = r2k.overhead_ratio >= 0.010 && r2k.overhead_ratio <= 0.015 &&
                      r4k.overhead_ratio >= 0.010 && r4k.overhead_ratio <= 0.015;
    return {pass, "prediction overhead: text-2k " + fmt(100 * r2k.overhead_ratio) +
                      "%, text " + fmt(100 * r4k.overhead_ratio) + "%, bracket [1%, 1.5%]"};
}

std::pair<bool, std::string> criterion_5() {
    costmodel::CostReport text = costmodel::layer_breakdown(presets::cost_shape("text"), 0.95);
    costmodel::CostReport retrieval =
        costmodel::layer_breakdown(presets::cost_shape("retrieval"), 0.95);
    costmodel::CostReport image = costmodel::layer_breakdown(presets::cost_shape("image"), 0.95);
    const bool bracket = text.reduction_ratio >= 2.5 && text.reduction_ratio <= 4.5;
    const bool ordinal = retrieval.attention_share_dense > image.attention_share_dense;
    return {bracket && ordinal,
            "text@95% reduction " + fmt(text.reduction_ratio) +
                "x in [2.5, 4.5]; attention share retrieval " +
                fmt(retrieval.attention_share_dense) + " > image " +
                fmt(image.attention_share_dense)};
}

// ------------------------------------------------------------ 6 (shared) ---

struct SeedRun {
    ToyModel dense;
    ToyModel dsa;
    double dense_acc = 0, dsa_acc = 0, random_acc = 0, local_acc = 0;
    ToyTask eval_task;
};

ModelConfig desk_model_cfg() {
    ModelConfig mc;
    mc.layers = 2;
    mc.d = 64;
    mc.heads = 2;
    mc.ffn = 128;
    mc.seq_len = 128;
    mc.vocab = 31;
    mc.sigma = 0.5;
    mc.precision = Precision::f32;
    return mc;
}

SeedRun run_seed(uint64_t seed) {
    Rng master(seed * 1000 + 7);
    Rng train_rng = master.split(1);
    Rng eval_rng = master.split(2);
    ToyTask train_task = make_toy_task(128, 31, 4096, train_rng);
    ToyTask eval_task = make_toy_task(128, 31, 512, eval_rng);

    ToyModel dense(desk_model_cfg(), master.split(3).next_u64());
    TrainConfig dense_cfg;
    dense_cfg.schedule = TrainSchedule::dense_pretrain;
    dense_cfg.steps = 420;
    dense_cfg.batch = 16;
    dense_cfg.lr = 1e-3;
    dense_cfg.mask_kind = MaskKind::none;
    dense_cfg.seed = seed * 10 + 1;
    TrainResult dense_res = train(dense, train_task, eval_task, dense_cfg);

    auto finetune = [&](MaskKind kind, size_t warmup) {
        ToyModel model = dense;  // adapt from the dense checkpoint
        TrainConfig cfg;
        cfg.schedule = TrainSchedule::adapt_finetune;
        cfg.phase1_steps = warmup;
        cfg.steps = 400;
        cfg.batch = 16;
        cfg.lr = 3e-4;
        cfg.predictor_lr = 3e-3;
        cfg.warmup_lr = 1e-2;
        cfg.lambda = kind == MaskKind::predicted ? 0.02 : 0.0;
        cfg.sparsity = 0.9;
        cfg.mask_kind = kind;
        cfg.seed = seed * 10 + 2 + static_cast<uint64_t>(kind);
        TrainResult res = train(model, train_task, eval_task, cfg);
        return std::pair{std::move(model), res.final_accuracy};
    };

    auto [dsa_model, dsa_acc] = finetune(MaskKind::predicted, 600);
    auto [rand_model, rand_acc] = finetune(MaskKind::random, 0);
    auto [local_model, local_acc] = finetune(MaskKind::local, 0);
    (void)rand_model;
    (void)local_model;

    SeedRun out{std::move(dense), std::move(dsa_model), 0, 0, 0, 0, {}};
    out.dense_acc = dense_res.final_accuracy;
    out.dsa_acc = dsa_acc;
    out.random_acc = rand_acc;
    out.local_acc = local_acc;
    out.eval_task = std::move(eval_task);
    return out;
}

std::pair<bool, std::string> criterion_6(const std::vector<SeedRun>& runs) {
    std::vector<double> dense, dsa, random_c, local_c;
    for (const auto& r : runs) {
        dense.push_back(r.dense_acc);
        dsa.push_back(r.dsa_acc);
        random_c.push_back(r.random_acc);
        local_c.push_back(r.local_acc);
    }
    const double md = median3(dense), ms = median3(dsa), mr = median3(random_c),
                 ml = median3(local_c);
    const bool pass = md > 0.95 && ms >= md - 0.02 && mr <= ms - 0.05 && ml <= ms - 0.05;
    std::ostringstream ss;
    ss << "median accuracies: dense " << fmt(md) << " (>0.95), dsa90 " << fmt(ms)
       << " (>= dense-0.02), random90 " << fmt(mr) << ", local90 " << fmt(ml)
       << " (each <= dsa-0.05)";
    return {pass, ss.str()};
}

// -------------------------------------------------------------------- 7 ---

std::pair<bool, std::string> criterion_7(SeedRun& run) {
    ToyModel& model = run.dense;
    const std::vector<double> thetas = {0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05};
    double base_acc = -1.0;
    double best_sparsity = 0.0;
    std::vector<std::pair<double, double>> table;
    double prev_sparsity = -1.0;
    bool monotone = true;
    for (double theta : thetas) {
        EvalOptions eo;
        eo.drop_threshold = theta;
        EvalResult er = evaluate(model, run.eval_task, eo);
        if (theta == 0.0) base_acc = er.accuracy;
        if (er.dropped_fraction < prev_sparsity) monotone = false;
        prev_sparsity = er.dropped_fraction;
        table.emplace_back(er.dropped_fraction, er.accuracy);
        if (er.accuracy >= base_acc - 0.01)
            best_sparsity = std::max(best_sparsity, er.dropped_fraction);
    }
    const bool pass = best_sparsity >= 0.75 && monotone;
    return {pass, "post-softmax threshold sweep: " + fmt(100 * best_sparsity) +
                      "% sparsity within 1 point of baseline " + fmt(base_acc) +
                      (monotone ? ", sparsity monotone in theta" : ", NOT monotone")};
}

// -------------------------------------------------------------------- 8 ---

std::pair<bool, std::string> criterion_8(std::vector<SeedRun>& runs) {
    const std::vector<int> bit_ladder = {0, 8, 4, 2};  // full, 8, 4, 2
    const size_t layers = runs[0].dsa.config().layers;
    // per-layer medians across seeds for each precision
    std::vector<std::vector<double>> med(bit_ladder.size(),
                                         std::vector<double>(layers, 0.0));
    for (size_t bi = 0; bi < bit_ladder.size(); ++bi) {
        for (size_t layer = 0; layer < layers; ++layer) {
            std::vector<double> vals;
            for (auto& run : runs) {
                EvalOptions eo;
                eo.dsa = true;
                eo.mask_kind = MaskKind::predicted;
                eo.sparsity = 0.9;
                eo.bits_override = bit_ladder[bi];
                EvalResult er = evaluate(run.dsa, run.eval_task, eo, true);
                vals.push_back(er.pred_acc_per_layer[layer]);
            }
            med[bi][layer] = median3(vals);
        }
    }
    bool monotone = true;
    for (size_t layer = 0; layer < layers; ++layer)
        for (size_t bi = 1; bi < bit_ladder.size(); ++bi)
            if (med[bi][layer] > med[bi - 1][layer] + 1e-12) monotone = false;
    // full-precision prediction accuracy of the adapted fixture sits in the
    // published 85-95% band
    bool fixture_band = true;
    for (size_t layer = 0; layer < layers; ++layer)
        if (med[0][layer] < 0.85) fixture_band = false;

    // random-mask prediction accuracy vs keep fraction, binomial bound
    Rng rng(4242);
    const size_t l = 128, keep = keep_per_row(l, 0.9);
    size_t hits = 0, total = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Matrix s = random_uniform(l, l, -1, 1, rng);
        SparseMask oracle = oracle_topk_mask(s, keep);
        SparseMask rnd_mask = random_mask(l, keep, rng);
        for (size_t i = 0; i < l; ++i)
            for (uint32_t j : rnd_mask.kept[i]) {
                ++total;
                hits += oracle.contains(i, j);
            }
    }
    const double p_hat = static_cast<double>(hits) / static_cast<double>(total);
    const double p = static_cast<double>(keep) / static_cast<double>(l);
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(total));
    const bool random_ok = std::abs(p_hat - p) <= 3 * sigma;

    std::ostringstream ss;
    ss << "pred-accuracy medians per layer at bits {full,8,4,2}:";
    for (size_t layer = 0; layer < layers; ++layer) {
        ss << " L" << layer << "[";
        for (size_t bi = 0; bi < bit_ladder.size(); ++bi)
            ss << (bi ? " " : "") << fmt(med[bi][layer]);
        ss << "]";
    }
    ss << (monotone ? " non-increasing" : " NOT monotone")
       << (fixture_band ? ", full-precision >= 0.85" : ", full-precision BELOW 0.85")
       << "; random-mask overlap " << fmt(p_hat) << " vs keep fraction " << fmt(p);
    return {monotone && fixture_band && random_ok, ss.str()};
}

// -------------------------------------------------------------------- 9 ---

std::pair<bool, std::string> criterion_9(std::vector<SeedRun>& runs) {
    using namespace dsattn::dataflow;
    const size_t band = 4;
    bool dominance = true, closed_form = true;

    auto check_mask = [&](const SparseMask& m) {
        AccessTrace rbr = simulate(m, {ScheduleKind::row_by_row, band});
        AccessTrace par = simulate(m, {ScheduleKind::row_parallel, band});
        AccessTrace reord = simulate(m, {ScheduleKind::row_parallel_reordered, band});
        if (!(reord.operand_fetches <= par.operand_fetches &&
              par.operand_fetches <= rbr.operand_fetches))
            dominance = false;
        uint64_t unions = 0;
        for (size_t first = 0; first < m.l; first += band) {
            std::set<uint32_t> u;
            for (size_t r = first; r < std::min(first + band, m.l); ++r)
                u.insert(m.kept[r].begin(), m.kept[r].end());
            unions += u.size();
        }
        if (reord.operand_fetches != unions) closed_form = false;
        return std::tuple{rbr.operand_fetches, par.operand_fetches, reord.operand_fetches};
    };

    Rng rng(991);
    check_mask(SparseMask::diagonal(64));
    for (int t = 0; t < 100; ++t)
        check_mask(random_mask(64, 1 + rng.uniform_int(16), rng));

    // synthetic global-token mask: 10% global columns + local positions
    SparseMask global(128);
    for (size_t i = 0; i < 128; ++i) {
        std::set<uint32_t> row;
        for (uint32_t g = 0; g < 13; ++g) row.insert(g * 10);  // shared global columns
        for (uint32_t off = 0; row.size() < 16; ++off)
            row.insert(static_cast<uint32_t>((i + off) % 128));
        global.kept[i].assign(row.begin(), row.end());
    }
    check_mask(global);
    ReductionReport greport = reduction_report(global, band);
    const bool global_ok = greport.row_parallel_reordered > 1.5;

    // masks harvested from the trained model: ordinal pattern of the
    // memory-access table (reordered > unreordered > 1)
    uint64_t nnz_sum = 0, par_sum = 0, reord_sum = 0, rbr_sum = 0;
    ToyModel& model = runs[0].dsa;
    for (size_t si = 0; si < 32; ++si) {
        std::vector<const Sample*> one = {&runs[0].eval_task.samples[si]};
        ForwardOptions fo;
        fo.dsa = true;
        fo.mask_kind = MaskKind::predicted;
        fo.sparsity = 0.9;
        fo.train_model = false;
        fo.train_predictor = false;
        fo.capture_masks = true;
        ad::Tape tape(false);
        BatchResult r = forward_batch(tape, model, runs[0].eval_task.spec, one, fo);
        for (const auto& layer_masks : r.stats.masks)
            for (const auto& m : layer_masks) {
                auto [a, b, c] = check_mask(m);
                rbr_sum += a;
                par_sum += b;
                reord_sum += c;
                nnz_sum += m.nnz();
            }
    }
    const double trained_par = static_cast<double>(nnz_sum) / static_cast<double>(par_sum);
    const double trained_reord = static_cast<double>(nnz_sum) / static_cast<double>(reord_sum);
    const bool trained_ok = trained_reord > trained_par && trained_par > 1.0;

    std::ostringstream ss;
    ss << "dominance " << (dominance ? "holds" : "VIOLATED") << ", column-union closed form "
       << (closed_form ? "exact" : "WRONG") << ", global-token reordered "
       << fmt(greport.row_parallel_reordered) << "x (>1.5), trained masks reordered "
       << fmt(trained_reord) << "x > unreordered " << fmt(trained_par) << "x > 1";
    return {dominance && closed_form && global_ok && trained_ok && rbr_sum == nnz_sum,
            ss.str()};
}

// ------------------------------------------------------------------- 10 ---

std::pair<bool, std::string> criterion_10() {
    Rng rng(515);
    bool structure_ok = true, nesting_ok = true, scale_ok = true;
    for (int t = 0; t < 200; ++t) {
        const size_t l = 16 + rng.uniform_int(17);
        Matrix s = random_uniform(l, l, -1, 1, rng);
        SparseMask m = colvec_mask(s, {4, VecOrientation::col}, 0.9);
        for (size_t band = 0; band < l; band += 4) {
            const size_t end = std::min(band + 4, l);
            for (size_t i = band; i < end; ++i)
                if (m.kept[i] != m.kept[band]) structure_ok = false;
        }
    }
    for (int t = 0; t < 1000; ++t) {
        const size_t l = 8 + rng.uniform_int(17);
        Matrix s = random_uniform(l, l, -2, 2, rng);
        const size_t a = 1 + rng.uniform_int(l / 2);
        const size_t b = a + rng.uniform_int(l - a) + 1;
        SparseMask ma = oracle_topk_mask(s, a);
        SparseMask mb = oracle_topk_mask(s, std::min(b, l));
        for (size_t i = 0; i < l; ++i)
            for (uint32_t j : ma.kept[i])
                if (!mb.contains(i, j)) nesting_ok = false;
        const double c = 0.01 + 10.0 * rng.uniform01();
        if (!(predicted_topk_mask(scale(s, c), a) == ma)) scale_ok = false;
    }
    std::ostringstream ss;
    ss << "colvec structural scan " << (structure_ok ? "clean" : "BROKEN")
       << "; topk nesting " << (nesting_ok ? "holds" : "VIOLATED")
       << " and positive-scale invariance " << (scale_ok ? "holds" : "VIOLATED")
       << " over 1000 random score matrices";
    return {structure_ok && nesting_ok && scale_ok, ss.str()};
}

// ------------------------------------------------------------------- 11 ---

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError("missing " + p.string());
    return {std::istreambuf_iterator<char>(f), {}};
}

std::pair<bool, std::string> criterion_11() {
#ifndef DSATTN_CLI_PATH
    return {false, "CLI path not configured"};
#else
    const fs::path root = fs::temp_directory_path() / "dsattn_acceptance_cli";
    fs::remove_all(root);
    fs::create_directories(root);
    auto run = [&](const std::string& args) {
        const std::string cmd = std::string(DSATTN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    std::ofstream(root / "train.json") << R"({
      "task": {"l": 32, "vocab": 31, "train_samples": 128, "eval_samples": 64},
      "model": {"layers": 1, "d": 32, "heads": 2, "ffn": 64, "sigma": 0.5},
      "train": {"schedule": "dense-pretrain", "steps": 30, "batch": 8, "lr": 0.001},
      "seed": 12,
      "out_prefix": "t"
    })";
    std::ofstream(root / "flow.json")
        << R"({"synthetic": {"kind": "random", "l": 64, "keep_per_row": 6, "seed": 3}, "band": 4})";

    bool all_equal = true;
    std::vector<std::string> compared;
    for (const std::string dir : {"a", "b"}) {
        fs::create_directories(root / dir);
        if (run("train --config " + (root / "train.json").string() + " --out " +
                (root / dir).string()) != 0)
            return {false, "train command failed"};
        std::ofstream(root / dir / "osp.json") << R"({
          "checkpoint": "t.checkpoint.bin", "task": {"eval_samples": 32},
          "thetas": [0.0, 0.01]})";
        if (run("oracle-sparsity --config " + (root / dir / "osp.json").string() + " --out " +
                (root / dir).string()) != 0)
            return {false, "oracle-sparsity command failed"};
        std::ofstream(root / dir / "sweep.json") << R"({
          "checkpoint": "t.checkpoint.bin", "mode": "eval",
          "task": {"eval_samples": 32},
          "grid": {"bits": ["full", 4], "sparsity": [0.5]}})";
        if (run("sweep --config " + (root / dir / "sweep.json").string() + " --out " +
                (root / dir).string()) != 0)
            return {false, "sweep command failed"};
        if (run("cost --preset text --out " + (root / dir).string()) != 0)
            return {false, "cost command failed"};
        if (run("dataflow --config " + (root / "flow.json").string() + " --out " +
                (root / dir).string()) != 0)
            return {false, "dataflow command failed"};
    }
    for (const char* name :
         {"t.checkpoint.bin", "t.metrics.csv", "t.report.json", "oracle-sparsity.report.json",
          "oracle-sparsity.csv", "sweep.report.json", "sweep.csv", "cost.report.json",
          "cost.csv", "dataflow.report.json"}) {
        compared.push_back(name);
        if (slurp(root / "a" / name) != slurp(root / "b" / name)) all_equal = false;
    }
    fs::remove_all(root);
    std::ostringstream ss;
    ss << "repeated CLI runs byte-identical across " << compared.size()
       << " report/checkpoint files (train, oracle-sparsity, sweep, cost, dataflow)";
    return {all_equal, ss.str()};
#endif
}

}  // namespace

int main() {
    std::printf("dsattn acceptance suite\n");
    run_criterion(1, [] { return criterion_1_and_2(false); });
    run_criterion(2, [] { return criterion_1_and_2(true); });
    run_criterion(3, [] { return criterion_3(); });
    run_criterion(4, [] { return criterion_4(); });
    run_criterion(5, [] { return criterion_5(); });

    Timer t6;
    std::vector<SeedRun> runs;
    try {
        for (uint64_t seed : {1ull, 2ull, 3ull}) {
            runs.push_back(run_seed(seed));
            std::printf("  [seed %llu] dense %.4f dsa90 %.4f random90 %.4f local90 %.4f\n",
                        static_cast<unsigned long long>(seed), runs.back().dense_acc,
                        runs.back().dsa_acc, runs.back().random_acc, runs.back().local_acc);
            std::fflush(stdout);
        }
        auto [pass6, detail6] = criterion_6(runs);
        report(6, pass6, detail6, t6.seconds());
    } catch (const std::exception& e) {
        report(6, false, std::string("exception: ") + e.what(), t6.seconds());
    }

    if (runs.size() == 3) {
        run_criterion(7, [&] { return criterion_7(runs[0]); });
        run_criterion(8, [&] { return criterion_8(runs); });
        run_criterion(9, [&] { return criterion_9(runs); });
    } else {
        report(7, false, "skipped: training runs unavailable", 0.0);
        report(8, false, "skipped: training runs unavailable", 0.0);
        report(9, false, "skipped: training runs unavailable", 0.0);
    }
    run_criterion(10, [] { return criterion_10(); });
    run_criterion(11, [] { return criterion_11(); });

    if (g_failures == 0)
        std::printf("all acceptance criteria passed\n");
    else
        std::printf("%d criterion(s) FAILED\n", g_failures);
    return g_failures;
}
