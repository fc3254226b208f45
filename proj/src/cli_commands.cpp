#include "dsattn/cli_commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "dsattn/costmodel.hpp"
#include "dsattn/dataflow.hpp"
#include "dsattn/maskgen.hpp"
#include "dsattn/presets.hpp"
#include "dsattn/trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace dsattn::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kArtifactVersion = "1.0";

void check_keys(const json& obj, const std::string& ctx, const std::set<std::string>& required,
                const std::set<std::string>& optional) {
    if (!obj.is_object()) throw ConfigError(ctx + ": expected an object");
    for (const auto& key : required)
        if (!obj.contains(key)) throw ConfigError(ctx + ": missing required key '" + key + "'");
    for (const auto& [key, _] : obj.items())
        if (!required.contains(key) && !optional.contains(key))
            throw ConfigError(ctx + ": unknown key '" + key + "'");
}

int parse_bits(const json& v, const std::string& ctx) {
    int bits = 0;
    if (v.is_string()) {
        if (v.get<std::string>() != "full")
            throw ConfigError(ctx + ": bits must be a number or \"full\"");
        bits = 0;
    } else if (v.is_number_integer()) {
        bits = v.get<int>();
    } else {
        throw ConfigError(ctx + ": bits must be a number or \"full\"");
    }
    QuantSpec{bits}.validate();
    return bits;
}

json bits_to_json(int bits) { return bits == 0 ? json("full") : json(bits); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    f << text;
    if (!f) throw IoError("write failed for " + path);
}

std::string resolve_path(const std::string& p, const std::string& out_dir) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(out_dir) / p).string();
}

struct TaskCfg {
    size_t l = 128, vocab = 31, train_samples = 4096, eval_samples = 512;
};

TaskCfg parse_task(const json& j) {
    check_keys(j, "task", {}, {"l", "vocab", "train_samples", "eval_samples"});
    TaskCfg t;
    t.l = j.value("l", t.l);
    t.vocab = j.value("vocab", t.vocab);
    t.train_samples = j.value("train_samples", t.train_samples);
    t.eval_samples = j.value("eval_samples", t.eval_samples);
    return t;
}

json task_to_json(const TaskCfg& t) {
    return {{"l", t.l},
            {"vocab", t.vocab},
            {"train_samples", t.train_samples},
            {"eval_samples", t.eval_samples}};
}

ModelConfig parse_model(const json& j, const TaskCfg& task) {
    check_keys(j, "model", {},
               {"layers", "d", "heads", "ffn", "sigma", "pred_bits", "scale_scores",
                "precision", "share_projection", "mask_constant", "mse_mean_over_heads",
                "mse_mean_over_layers"});
    ModelConfig m;
    m.layers = j.value("layers", m.layers);
    m.d = j.value("d", m.d);
    m.heads = j.value("heads", m.heads);
    m.ffn = j.value("ffn", m.ffn);
    m.sigma = j.value("sigma", m.sigma);
    if (j.contains("pred_bits")) m.pred_bits = parse_bits(j.at("pred_bits"), "model.pred_bits");
    m.scale_scores = j.value("scale_scores", m.scale_scores);
    m.share_projection = j.value("share_projection", m.share_projection);
    m.mask_constant = j.value("mask_constant", m.mask_constant);
    m.mse_mean_over_heads = j.value("mse_mean_over_heads", m.mse_mean_over_heads);
    m.mse_mean_over_layers = j.value("mse_mean_over_layers", m.mse_mean_over_layers);
    if (j.contains("precision")) {
        const std::string p = j.at("precision");
        if (p != "f32" && p != "f64") throw ConfigError("model.precision must be f32 or f64");
        m.precision = p == "f32" ? Precision::f32 : Precision::f64;
    }
    m.seq_len = task.l;
    m.vocab = task.vocab;
    m.validate();
    return m;
}

json model_to_json(const ModelConfig& m) {
    return {{"layers", m.layers},
            {"d", m.d},
            {"heads", m.heads},
            {"ffn", m.ffn},
            {"sigma", m.sigma},
            {"pred_bits", bits_to_json(m.pred_bits)},
            {"scale_scores", m.scale_scores},
            {"share_projection", m.share_projection},
            {"mask_constant", m.mask_constant},
            {"mse_mean_over_heads", m.mse_mean_over_heads},
            {"mse_mean_over_layers", m.mse_mean_over_layers},
            {"precision", m.precision == Precision::f32 ? "f32" : "f64"}};
}

TrainConfig parse_train(const json& j) {
    check_keys(j, "train", {"schedule"},
               {"steps", "phase1_steps", "batch", "lr", "predictor_lr", "warmup_lr", "lambda",
                "sparsity", "mask_kind", "eval_every", "stats_every", "threads"});
    TrainConfig t;
    t.schedule = schedule_from_string(j.at("schedule"));
    t.steps = j.value("steps", t.steps);
    t.phase1_steps = j.value("phase1_steps", t.phase1_steps);
    t.batch = j.value("batch", t.batch);
    t.lr = j.value("lr", t.lr);
    t.predictor_lr = j.value("predictor_lr", t.predictor_lr);
    t.warmup_lr = j.value("warmup_lr", t.warmup_lr);
    t.lambda = j.value("lambda", t.lambda);
    t.sparsity = j.value("sparsity", t.sparsity);
    if (j.contains("mask_kind")) t.mask_kind = mask_kind_from_string(j.at("mask_kind"));
    t.eval_every = j.value("eval_every", t.eval_every);
    t.stats_every = j.value("stats_every", t.stats_every);
    t.threads = j.value("threads", t.threads);
    if (t.threads < 1) throw ConfigError("train.threads must be >= 1");
    return t;
}

json train_to_json(const TrainConfig& t) {
    return {{"schedule", schedule_name(t.schedule)},
            {"steps", t.steps},
            {"phase1_steps", t.phase1_steps},
            {"batch", t.batch},
            {"lr", t.lr},
            {"predictor_lr", t.predictor_lr},
            {"warmup_lr", t.warmup_lr},
            {"lambda", t.lambda},
            {"sparsity", t.sparsity},
            {"mask_kind", mask_kind_name(t.mask_kind)},
            {"eval_every", t.eval_every},
            {"stats_every", t.stats_every},
            {"threads", t.threads}};
}

costmodel::LayerShape parse_shape(const json& j) {
    check_keys(j, "shape", {"l", "d", "d_k", "d_v", "heads", "ffn"},
               {"proj_k", "pred_bits", "beta_override"});
    costmodel::LayerShape s;
    s.l = j.at("l");
    s.d = j.at("d");
    s.d_k = j.at("d_k");
    s.d_v = j.at("d_v");
    s.heads = j.at("heads");
    s.ffn = j.at("ffn");
    s.proj_k = j.value("proj_k", size_t{0});
    if (j.contains("pred_bits")) s.pred_bits = parse_bits(j.at("pred_bits"), "shape.pred_bits");
    s.beta_override = j.value("beta_override", -1.0);
    s.validate();
    return s;
}

json shape_to_json(const costmodel::LayerShape& s) {
    return {{"l", s.l},          {"d", s.d},
            {"d_k", s.d_k},      {"d_v", s.d_v},
            {"heads", s.heads},  {"ffn", s.ffn},
            {"proj_k", s.proj_k}, {"pred_bits", bits_to_json(s.pred_bits)},
            {"beta_override", s.beta_override}};
}

json report_header(const std::string& command, json resolved_config) {
    return {{"artifact", "dsattn"},
            {"version", kArtifactVersion},
            {"command", command},
            {"config", std::move(resolved_config)}};
}

// ---------------------------------------------------------------- train ---

int cmd_train(const json& cfg, const std::string& out_dir) {
    check_keys(cfg, "config", {"task", "train"},
               {"model", "seed", "data_seed", "init_checkpoint", "out_prefix"});
    const TaskCfg task_cfg = parse_task(cfg.value("task", json::object()));
    const TrainConfig base_train = parse_train(cfg.at("train"));
    const uint64_t seed = cfg.value("seed", 1);
    const uint64_t data_seed = cfg.value("data_seed", 101);
    const std::string prefix = cfg.value("out_prefix", std::string("run"));
    const std::string init_ckpt = cfg.value("init_checkpoint", std::string());

    TrainConfig train_cfg = base_train;
    train_cfg.seed = seed;

    Rng master(seed);
    // data streams are keyed by data_seed alone so sweep / oracle-sparsity
    // runs with the same data_seed evaluate on the identical sample set
    Rng data_rng(data_seed + 1);
    Rng eval_rng(data_seed);
    ToyTask train_task = make_toy_task(task_cfg.l, task_cfg.vocab, task_cfg.train_samples,
                                       data_rng);
    ToyTask eval_task = make_toy_task(task_cfg.l, task_cfg.vocab, task_cfg.eval_samples,
                                      eval_rng);

    ModelConfig model_cfg;
    ToyModel model = [&] {
        if (!init_ckpt.empty()) {
            ToyModel m = ToyModel::load(resolve_path(init_ckpt, out_dir));
            if (cfg.contains("model")) {
                ModelConfig requested = parse_model(cfg.at("model"), task_cfg);
                ModelConfig actual = m.config();
                if (requested.layers != actual.layers || requested.d != actual.d ||
                    requested.heads != actual.heads || requested.ffn != actual.ffn ||
                    requested.sigma != actual.sigma)
                    throw ConfigError("train: model config conflicts with init_checkpoint");
            }
            return m;
        }
        return ToyModel(parse_model(cfg.value("model", json::object()), task_cfg),
                        master.split(102).next_u64());
    }();
    model_cfg = model.config();

    TrainResult result = train(model, train_task, eval_task, train_cfg);

    json resolved = {{"task", task_to_json(task_cfg)},
                     {"model", model_to_json(model_cfg)},
                     {"train", train_to_json(train_cfg)},
                     {"seed", seed},
                     {"data_seed", data_seed},
                     {"init_checkpoint", init_ckpt},
                     {"out_prefix", prefix}};
    json report = report_header("train", resolved);
    report["results"] = {{"final_accuracy", result.final_accuracy},
                         {"final_pred_acc_per_layer", result.final_pred_acc_per_layer},
                         {"final_rel_fro", result.final_rel_fro},
                         {"steps_run", result.history.size()},
                         {"param_scalars", model.param_count_scalars()}};

    const fs::path base = fs::path(out_dir) / prefix;
    model.save(base.string() + ".checkpoint.bin", resolved.dump());
    write_metrics_csv(base.string() + ".metrics.csv", result.history);
    write_text(base.string() + ".report.json", report.dump(2) + "\n");
    std::cout << "train: final_accuracy=" << result.final_accuracy << "\n";
    return 0;
}

// ----------------------------------------------------------------- cost ---

json cost_row(const costmodel::CostReport& r, const costmodel::EnergyReport& e) {
    return {{"sparsity", r.sparsity},
            {"macs_linear", r.macs_linear},
            {"macs_attention_dense", r.macs_attention},
            {"macs_other", r.macs_other},
            {"macs_prediction_raw", r.macs_prediction_raw},
            {"macs_prediction_weighted", r.macs_prediction_weighted},
            {"dense_total", r.dense_total},
            {"dsa_total", r.dsa_total},
            {"reduction_ratio", r.reduction_ratio},
            {"overhead_ratio", r.overhead_ratio},
            {"attention_share_dense", r.attention_share_dense},
            {"softmax_saving", costmodel::sparse_softmax_saving(r.shape.l, r.sparsity)},
            {"energy_dense", e.dense},
            {"energy_dsa", e.dsa},
            {"energy_ratio_vs_dense", e.ratio_vs_dense},
            {"energy_reduction", e.reduction}};
}

int cmd_cost(const json& cfg, const std::string& out_dir) {
    check_keys(cfg, "config", {}, {"preset", "shape", "sparsities", "energy_table",
                                   "out_prefix"});
    costmodel::LayerShape shape;
    if (cfg.contains("preset")) {
        shape = presets::cost_shape(cfg.at("preset"));
    } else if (cfg.contains("shape")) {
        shape = parse_shape(cfg.at("shape"));
    } else {
        throw ConfigError("cost: need 'preset' or 'shape'");
    }
    std::vector<double> sparsities = cfg.value("sparsities", std::vector<double>{0.9, 0.95});
    costmodel::EnergyTable table = costmodel::EnergyTable::placeholder_defaults();
    if (cfg.contains("energy_table")) {
        check_keys(cfg.at("energy_table"), "energy_table", {"factors"}, {"provenance"});
        table.factors.clear();
        for (const auto& [k, v] : cfg.at("energy_table").at("factors").items())
            table.factors[k] = v.get<double>();
        table.provenance = cfg.at("energy_table").value("provenance", "user-supplied");
    }
    const std::string prefix = cfg.value("out_prefix", std::string("cost"));

    json resolved = {{"shape", shape_to_json(shape)},
                     {"sparsities", sparsities},
                     {"energy_table",
                      {{"factors", table.factors}, {"provenance", table.provenance}}},
                     {"out_prefix", prefix}};
    if (cfg.contains("preset")) resolved["preset"] = cfg.at("preset");
    json report = report_header("cost", resolved);
    json rows = json::array();
    std::string csv =
        "sparsity,macs_linear,macs_attention_dense,macs_other,macs_prediction_raw,"
        "macs_prediction_weighted,dense_total,dsa_total,reduction_ratio,overhead_ratio,"
        "attention_share_dense,softmax_saving,energy_ratio_vs_dense\n";
    for (double sp : sparsities) {
        costmodel::CostReport r = costmodel::layer_breakdown(shape, sp);
        costmodel::EnergyReport e = costmodel::energy_estimate(r, table);
        rows.push_back(cost_row(r, e));
        char line[512];
        std::snprintf(line, sizeof(line),
                      "%.6g,%llu,%llu,%llu,%llu,%.17g,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      sp, static_cast<unsigned long long>(r.macs_linear),
                      static_cast<unsigned long long>(r.macs_attention),
                      static_cast<unsigned long long>(r.macs_other),
                      static_cast<unsigned long long>(r.macs_prediction_raw),
                      r.macs_prediction_weighted,
                      static_cast<unsigned long long>(r.dense_total), r.dsa_total,
                      r.reduction_ratio, r.overhead_ratio, r.attention_share_dense,
                      costmodel::sparse_softmax_saving(shape.l, sp), e.ratio_vs_dense);
        csv += line;
    }
    report["results"] = rows;
    const fs::path base = fs::path(out_dir) / prefix;
    write_text(base.string() + ".report.json", report.dump(2) + "\n");
    write_text(base.string() + ".csv", csv);
    std::cout << "cost: " << rows.size() << " rows\n";
    return 0;
}

// ------------------------------------------------------------- dataflow ---

json trace_to_json(const dataflow::AccessTrace& t) {
    return {{"operand_fetches", t.operand_fetches},
            {"broadcast_steps", t.broadcast_steps},
            {"pe_idle_steps", t.pe_idle_steps},
            {"bands", t.bands.size()}};
}

SparseMask synthetic_mask(const json& j) {
    check_keys(j, "synthetic", {"kind", "l"}, {"keep_per_row", "global_cols", "seed"});
    const std::string kind = j.at("kind");
    const size_t l = j.at("l");
    if (kind == "diagonal") return SparseMask::diagonal(l);
    if (kind == "full") return SparseMask::full(l);
    if (kind == "random") {
        Rng rng(j.value("seed", 7));
        return random_mask(l, j.value("keep_per_row", std::max<size_t>(1, l / 10)), rng);
    }
    if (kind == "global-local") {
        // a few globally shared columns plus a small local window per row
        const size_t globals = j.value("global_cols", std::max<size_t>(1, l / 10));
        const size_t keep = j.value("keep_per_row", globals + 3);
        if (keep < globals) throw ConfigError("global-local: keep_per_row < global_cols");
        Rng rng(j.value("seed", 7));
        std::vector<uint32_t> gcols;
        SparseMask gm = random_mask(l, globals, rng);  // reuse row 0 as the global set
        gcols = gm.kept[0];
        SparseMask m(l);
        for (size_t i = 0; i < l; ++i) {
            std::set<uint32_t> row(gcols.begin(), gcols.end());
            uint32_t j0 = static_cast<uint32_t>(i);
            for (uint32_t off = 0; row.size() < keep; ++off) {
                row.insert(static_cast<uint32_t>((j0 + off) % l));
            }
            m.kept[i].assign(row.begin(), row.end());
        }
        return m;
    }
    throw ConfigError("unknown synthetic mask kind: " + kind);
}

int cmd_dataflow(const json& cfg, const std::string& out_dir) {
    check_keys(cfg, "config", {}, {"masks", "synthetic", "band", "out_prefix"});
    const size_t band = cfg.value("band", 4);
    const std::string prefix = cfg.value("out_prefix", std::string("dataflow"));
    std::vector<std::pair<std::string, SparseMask>> masks;
    if (cfg.contains("masks")) {
        for (const auto& p : cfg.at("masks")) {
            const std::string path = resolve_path(p.get<std::string>(), out_dir);
            masks.emplace_back(p.get<std::string>(), read_mask(path));
        }
    }
    if (cfg.contains("synthetic")) masks.emplace_back("synthetic", synthetic_mask(cfg.at("synthetic")));
    if (masks.empty()) throw ConfigError("dataflow: need 'masks' or 'synthetic'");

    json resolved = cfg;
    resolved["band"] = band;
    resolved["out_prefix"] = prefix;
    json report = report_header("dataflow", resolved);
    json rows = json::array();
    for (const auto& [name, mask] : masks) {
        using dataflow::ScheduleKind;
        auto row_by_row = dataflow::simulate(mask, {ScheduleKind::row_by_row, band});
        auto parallel = dataflow::simulate(mask, {ScheduleKind::row_parallel, band});
        auto reordered = dataflow::simulate(mask, {ScheduleKind::row_parallel_reordered, band});
        auto ratios = dataflow::reduction_report(mask, band);
        auto chain = dataflow::chain_simulate(mask, {ScheduleKind::row_parallel_reordered, band});
        rows.push_back({{"mask", name},
                        {"l", mask.l},
                        {"nnz", mask.nnz()},
                        {"sparsity", mask.sparsity()},
                        {"band", band},
                        {"row_by_row", trace_to_json(row_by_row)},
                        {"row_parallel", trace_to_json(parallel)},
                        {"row_parallel_reordered", trace_to_json(reordered)},
                        {"reduction", {{"row_by_row", ratios.row_by_row},
                                       {"row_parallel", ratios.row_parallel},
                                       {"row_parallel_reordered", ratios.row_parallel_reordered}}},
                        {"chain", {{"sddmm", trace_to_json(chain.sddmm_stage)},
                                   {"spmm", trace_to_json(chain.spmm_stage)},
                                   {"no_reshuffle", chain.no_reshuffle}}}});
    }
    report["results"] = rows;
    const fs::path base = fs::path(out_dir) / prefix;
    write_text(base.string() + ".report.json", report.dump(2) + "\n");
    std::cout << "dataflow: " << rows.size() << " masks\n";
    return 0;
}

// ------------------------------------------------------- oracle-sparsity ---

int cmd_oracle_sparsity(const json& cfg, const std::string& out_dir) {
    check_keys(cfg, "config", {"checkpoint"}, {"task", "thetas", "out_prefix", "data_seed"});
    const std::string ckpt = resolve_path(cfg.at("checkpoint"), out_dir);
    ToyModel model = ToyModel::load(ckpt);
    TaskCfg task_cfg = parse_task(cfg.value("task", json::object()));
    task_cfg.l = model.config().seq_len;
    task_cfg.vocab = model.config().vocab;
    const uint64_t data_seed = cfg.value("data_seed", 101);
    std::vector<double> thetas =
        cfg.value("thetas", std::vector<double>{0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05});
    const std::string prefix = cfg.value("out_prefix", std::string("oracle-sparsity"));

    Rng data_rng(data_seed);
    ToyTask eval_task = make_toy_task(task_cfg.l, task_cfg.vocab, task_cfg.eval_samples,
                                      data_rng);

    json resolved = {{"checkpoint", cfg.at("checkpoint")},
                     {"task", task_to_json(task_cfg)},
                     {"thetas", thetas},
                     {"data_seed", data_seed},
                     {"out_prefix", prefix}};
    json report = report_header("oracle-sparsity", resolved);
    json rows = json::array();
    std::string csv = "theta,sparsity,accuracy\n";
    for (double theta : thetas) {
        EvalOptions eo;
        eo.drop_threshold = theta;
        EvalResult er = evaluate(model, eval_task, eo);
        rows.push_back({{"theta", theta},
                        {"sparsity", er.dropped_fraction},
                        {"accuracy", er.accuracy}});
        char line[128];
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", theta, er.dropped_fraction,
                      er.accuracy);
        csv += line;
    }
    report["results"] = rows;
    const fs::path base = fs::path(out_dir) / prefix;
    write_text(base.string() + ".report.json", report.dump(2) + "\n");
    write_text(base.string() + ".csv", csv);
    std::cout << "oracle-sparsity: " << rows.size() << " thetas\n";
    return 0;
}

// ---------------------------------------------------------------- sweep ---

int cmd_sweep(const json& cfg, const std::string& out_dir) {
    check_keys(cfg, "config", {"checkpoint", "grid"},
               {"task", "mode", "include_random_control", "out_prefix", "data_seed",
                "finetune"});
    const std::string mode = cfg.value("mode", std::string("eval"));
    if (mode != "eval" && mode != "finetune")
        throw ConfigError("sweep: mode must be 'eval' or 'finetune'");
    const std::string ckpt_rel = cfg.at("checkpoint");
    const std::string ckpt = resolve_path(ckpt_rel, out_dir);
    ToyModel base_model = ToyModel::load(ckpt);
    TaskCfg task_cfg = parse_task(cfg.value("task", json::object()));
    task_cfg.l = base_model.config().seq_len;
    task_cfg.vocab = base_model.config().vocab;
    const uint64_t data_seed = cfg.value("data_seed", 101);
    const std::string prefix = cfg.value("out_prefix", std::string("sweep"));
    const bool random_control = cfg.value("include_random_control", true);

    const json& grid = cfg.at("grid");
    check_keys(grid, "grid", {}, {"sigma", "bits", "sparsity"});
    std::vector<double> sigmas = grid.value("sigma", std::vector<double>{});
    if (sigmas.empty()) sigmas.push_back(base_model.config().sigma);
    std::vector<int> bits_list;
    if (grid.contains("bits"))
        for (const auto& b : grid.at("bits")) bits_list.push_back(parse_bits(b, "grid.bits"));
    if (bits_list.empty()) bits_list.push_back(base_model.config().pred_bits);
    std::vector<double> sparsities = grid.value("sparsity", std::vector<double>{0.9});

    Rng data_rng(data_seed);
    ToyTask eval_task = make_toy_task(task_cfg.l, task_cfg.vocab, task_cfg.eval_samples,
                                      data_rng);
    Rng train_data_rng(data_seed + 1);
    ToyTask train_task = mode == "finetune"
                             ? make_toy_task(task_cfg.l, task_cfg.vocab,
                                             task_cfg.train_samples, train_data_rng)
                             : ToyTask{};

    std::optional<TrainConfig> ft_cfg;
    if (mode == "finetune") {
        if (!cfg.contains("finetune")) throw ConfigError("sweep: finetune mode needs 'finetune'");
        ft_cfg = parse_train(cfg.at("finetune"));
    } else {
        for (double s : sigmas)
            if (s != base_model.config().sigma)
                throw ConfigError("sweep: sigma sweep requires mode=finetune");
    }

    json resolved = {{"checkpoint", ckpt_rel},
                     {"mode", mode},
                     {"task", task_to_json(task_cfg)},
                     {"grid",
                      {{"sigma", sigmas},
                       {"bits", [&] {
                            json a = json::array();
                            for (int b : bits_list) a.push_back(bits_to_json(b));
                            return a;
                        }()},
                       {"sparsity", sparsities}}},
                     {"include_random_control", random_control},
                     {"data_seed", data_seed},
                     {"out_prefix", prefix}};
    if (ft_cfg) resolved["finetune"] = train_to_json(*ft_cfg);
    json report = report_header("sweep", resolved);
    json rows = json::array();
    std::string csv = "sigma,bits,sparsity,mask_kind,accuracy,pred_acc_mean,rel_fro,mse\n";

    auto emit_row = [&](double sigma, int bits, double sparsity, const std::string& kind,
                        const EvalResult& er) {
        double pmean = -1.0;
        if (!er.pred_acc_per_layer.empty()) {
            pmean = 0.0;
            for (double a : er.pred_acc_per_layer) pmean += a;
            pmean /= static_cast<double>(er.pred_acc_per_layer.size());
        }
        rows.push_back({{"sigma", sigma},
                        {"bits", bits_to_json(bits)},
                        {"sparsity", sparsity},
                        {"mask_kind", kind},
                        {"accuracy", er.accuracy},
                        {"pred_acc_per_layer", er.pred_acc_per_layer},
                        {"rel_fro", er.rel_fro},
                        {"mse", er.mse}});
        char line[256];
        std::snprintf(line, sizeof(line), "%.6g,%s,%.6g,%s,%.17g,%.17g,%.17g,%.17g\n", sigma,
                      bits == 0 ? "full" : std::to_string(bits).c_str(), sparsity, kind.c_str(),
                      er.accuracy, pmean, er.rel_fro, er.mse);
        csv += line;
    };

    size_t cell_index = 0;
    for (double sigma : sigmas)
        for (int bits : bits_list)
            for (double sparsity : sparsities) {
                ++cell_index;
                if (mode == "eval") {
                    EvalOptions eo;
                    eo.dsa = true;
                    eo.mask_kind = MaskKind::predicted;
                    eo.sparsity = sparsity;
                    eo.bits_override = bits;
                    EvalResult er = evaluate(base_model, eval_task, eo, true);
                    emit_row(sigma, bits, sparsity, "predicted", er);
                } else {
                    ModelConfig mc = base_model.config();
                    mc.sigma = sigma;
                    mc.pred_bits = bits;
                    ToyModel cell_model(mc, data_seed + 1000 + cell_index);
                    for (auto& p : cell_model.params()) {
                        if (p.predictor_path && mc.sigma != base_model.config().sigma) continue;
                        const auto& src = base_model.param(p.name);
                        if (src.value.same_shape(p.value)) p.value = src.value;
                    }
                    TrainConfig tc = *ft_cfg;
                    tc.sparsity = sparsity;
                    tc.seed = data_seed + 2000 + cell_index;
                    TrainResult tr = train(cell_model, train_task, eval_task, tc);
                    EvalOptions eo;
                    eo.dsa = true;
                    eo.mask_kind = MaskKind::predicted;
                    eo.sparsity = sparsity;
                    EvalResult er = evaluate(cell_model, eval_task, eo, true);
                    (void)tr;
                    emit_row(sigma, bits, sparsity, "predicted", er);
                }
            }
    if (random_control) {
        for (double sparsity : sparsities) {
            EvalOptions eo;
            eo.dsa = true;
            eo.mask_kind = MaskKind::random;
            eo.sparsity = sparsity;
            EvalResult er = evaluate(base_model, eval_task, eo, false);
            emit_row(base_model.config().sigma, base_model.config().pred_bits, sparsity,
                     "random", er);
        }
    }
    report["results"] = rows;
    const fs::path base = fs::path(out_dir) / prefix;
    write_text(base.string() + ".report.json", report.dump(2) + "\n");
    write_text(base.string() + ".csv", csv);
    std::cout << "sweep: " << rows.size() << " rows\n";
    return 0;
}

}  // namespace

int run_command(const std::string& command, const std::string& config_json,
                const std::string& out_dir) {
    try {
        json cfg = json::parse(config_json);
        fs::create_directories(out_dir.empty() ? "." : out_dir);
        if (command == "train") return cmd_train(cfg, out_dir);
        if (command == "cost") return cmd_cost(cfg, out_dir);
        if (command == "dataflow") return cmd_dataflow(cfg, out_dir);
        if (command == "oracle-sparsity") return cmd_oracle_sparsity(cfg, out_dir);
        if (command == "sweep") return cmd_sweep(cfg, out_dir);
        throw ConfigError("unknown command: " + command);
    } catch (const json::parse_error& e) {
        std::cerr << "config parse error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParamError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "numerical divergence: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
}

int main_entry(int argc, char** argv) {
    CLI::App app{"dynamic sparse attention engine"};
    app.require_subcommand(1);

    std::string config_path, preset, out_dir;
    int64_t seed_override = -1;
    bool have_seed = false;

    if (const char* env = std::getenv("DSATTN_OUT")) out_dir = env;
    if (out_dir.empty()) out_dir = ".";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--preset", preset, "named built-in config");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option_function<int64_t>(
            "--seed",
            [&](const int64_t& v) {
                seed_override = v;
                have_seed = true;
            },
            "override config seed");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train / finetune the toy model");
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "sigma x bits x sparsity grid");
    CLI::App* cost_cmd = app.add_subcommand("cost", "analytic MAC / energy report");
    CLI::App* dataflow_cmd = app.add_subcommand("dataflow", "memory-access simulation");
    CLI::App* oracle_cmd =
        app.add_subcommand("oracle-sparsity", "post-softmax threshold sweep");
    for (CLI::App* sub : {train_cmd, sweep_cmd, cost_cmd, dataflow_cmd, oracle_cmd})
        add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::string command;
    for (const auto& [sub, name] :
         std::initializer_list<std::pair<CLI::App*, const char*>>{{train_cmd, "train"},
                                                                  {sweep_cmd, "sweep"},
                                                                  {cost_cmd, "cost"},
                                                                  {dataflow_cmd, "dataflow"},
                                                                  {oracle_cmd,
                                                                   "oracle-sparsity"}})
        if (sub->parsed()) command = name;

    std::string config_text;
    try {
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw IoError("cannot open config " + config_path);
            config_text.assign(std::istreambuf_iterator<char>(f), {});
        } else if (!preset.empty()) {
            if (command == "cost") {
                json j = {{"preset", preset}};
                config_text = j.dump();
            } else if (command == "train") {
                config_text = presets::train_config_json(preset);
            } else {
                throw ConfigError("presets are available for 'train' and 'cost' only");
            }
        } else {
            throw ConfigError("need --config or --preset");
        }
        if (have_seed) {
            json cfg = json::parse(config_text);
            cfg["seed"] = seed_override;
            config_text = cfg.dump();
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const json::exception& e) {
        std::cerr << "config parse error: " << e.what() << "\n";
        return 2;
    }

    return run_command(command, config_text, out_dir);
}

}  // namespace dsattn::cli
