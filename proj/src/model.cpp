#include "dsattn/model.hpp"

#include <cmath>

#include "dsattn/linalg.hpp"
#include "dsattn/serialize.hpp"

#include "json.hpp"

namespace dsattn {

size_t ModelConfig::proj_k() const {
    const auto k = static_cast<size_t>(std::lround(sigma * static_cast<double>(d)));
    return std::max<size_t>(1, std::min(k, d));
}

void ModelConfig::validate() const {
    if (layers < 1 || d < 1 || heads < 1 || ffn < 1 || seq_len < 2 || vocab < 2 ||
        n_classes < 2)
        throw ParamError("ModelConfig: all dimensions must be positive");
    if (d % heads != 0) throw ParamError("ModelConfig: heads must divide d");
    if (!(sigma > 0.0 && sigma <= 1.0)) throw ParamError("ModelConfig: sigma must be in (0,1]");
    QuantSpec{pred_bits}.validate();
    if (mask_constant <= 0) throw ParamError("ModelConfig: mask_constant must be positive");
}

ToyModel::ToyModel(ModelConfig cfg, uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(init_seed);
    const Precision prec = cfg_.precision;
    const size_t d = cfg_.d, dk = cfg_.d_head(), k = cfg_.proj_k();
    auto linear_init = [&](size_t rows, size_t cols) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
        return random_uniform(rows, cols, -bound, bound, rng, prec);
    };
    auto push = [&](const std::string& name, Matrix m, bool pred = false) {
        params_.push_back({name, std::move(m), Matrix{}, Matrix{}, pred});
    };

    push("emb", random_normal(cfg_.vocab, d, 0.0, 1.0, rng, prec));
    push("pos", random_normal(cfg_.seq_len, d, 0.0, 0.02, rng, prec));
    for (size_t layer = 0; layer < cfg_.layers; ++layer) {
        const std::string lp = "layer" + std::to_string(layer) + ".";
        push(lp + "ln1.g", Matrix::filled(1, d, 1.0, prec));
        push(lp + "ln1.b", Matrix::zeros(1, d, prec));
        for (size_t h = 0; h < cfg_.heads; ++h) {
            const std::string hp = lp + "h" + std::to_string(h) + ".";
            push(hp + "wq", linear_init(d, dk));
            push(hp + "wk", linear_init(d, dk));
            push(hp + "wv", linear_init(d, dk));
        }
        push(lp + "wo", linear_init(d, d));
        push(lp + "ln2.g", Matrix::filled(1, d, 1.0, prec));
        push(lp + "ln2.b", Matrix::zeros(1, d, prec));
        push(lp + "ffn.w1", linear_init(d, cfg_.ffn));
        push(lp + "ffn.b1", Matrix::zeros(1, cfg_.ffn, prec));
        push(lp + "ffn.w2", linear_init(cfg_.ffn, d));
        push(lp + "ffn.b2", Matrix::zeros(1, d, prec));
        for (size_t h = 0; h < cfg_.heads; ++h) {
            const std::string hp = lp + "h" + std::to_string(h) + ".";
            push(hp + "pred.wq", random_normal(k, k, 0.0, 0.1, rng, prec), true);
            push(hp + "pred.wk", random_normal(k, k, 0.0, 0.1, rng, prec), true);
        }
    }
    push("lnf.g", Matrix::filled(1, d, 1.0, prec));
    push("lnf.b", Matrix::zeros(1, d, prec));
    push("head.w", linear_init(d, cfg_.n_classes));
    push("head.b", Matrix::zeros(1, cfg_.n_classes, prec));

    // Frozen sparse random projections, one per layer (shared across heads).
    for (size_t layer = 0; layer < cfg_.layers; ++layer) {
        const uint64_t pseed = rng.next_u64();
        projections_.push_back(std::make_shared<ProjectionMatrix>(init_projection(d, k, pseed)));
    }
    index_params();
}

void ToyModel::index_params() {
    index_.clear();
    for (size_t i = 0; i < params_.size(); ++i) index_[params_[i].name] = i;
}

size_t ToyModel::param_index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ParamError("ToyModel: unknown parameter " + name);
    return it->second;
}

size_t ToyModel::param_count_scalars() const {
    size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void ToyModel::save(const std::string& path, const std::string& extra_meta_json) const {
    nlohmann::ordered_json meta;
    meta["kind"] = "dsattn-checkpoint";
    meta["config"] = {{"layers", cfg_.layers},
                      {"d", cfg_.d},
                      {"heads", cfg_.heads},
                      {"ffn", cfg_.ffn},
                      {"seq_len", cfg_.seq_len},
                      {"vocab", cfg_.vocab},
                      {"n_classes", cfg_.n_classes},
                      {"sigma", cfg_.sigma},
                      {"pred_bits", cfg_.pred_bits},
                      {"scale_scores", cfg_.scale_scores},
                      {"share_projection", cfg_.share_projection},
                      {"mse_mean_over_heads", cfg_.mse_mean_over_heads},
                      {"mse_mean_over_layers", cfg_.mse_mean_over_layers},
                      {"precision", cfg_.precision == Precision::f32 ? "f32" : "f64"},
                      {"mask_constant", cfg_.mask_constant}};
    if (!extra_meta_json.empty()) meta["extra"] = nlohmann::ordered_json::parse(extra_meta_json);
    std::vector<NamedMatrix> entries;
    for (const auto& p : params_) entries.push_back({p.name, p.value});
    for (size_t layer = 0; layer < projections_.size(); ++layer)
        entries.push_back({"proj.layer" + std::to_string(layer), projections_[layer]->p});
    write_container(path, entries, meta.dump());
}

ToyModel ToyModel::load(const std::string& path) {
    Container c = read_container(path);
    auto meta = nlohmann::json::parse(c.meta);
    if (meta.value("kind", "") != "dsattn-checkpoint")
        throw IoError("ToyModel::load: not a checkpoint file: " + path);
    const auto& jc = meta.at("config");
    ModelConfig cfg;
    cfg.layers = jc.at("layers");
    cfg.d = jc.at("d");
    cfg.heads = jc.at("heads");
    cfg.ffn = jc.at("ffn");
    cfg.seq_len = jc.at("seq_len");
    cfg.vocab = jc.at("vocab");
    cfg.n_classes = jc.at("n_classes");
    cfg.sigma = jc.at("sigma");
    cfg.pred_bits = jc.at("pred_bits");
    cfg.scale_scores = jc.at("scale_scores");
    cfg.share_projection = jc.at("share_projection");
    cfg.mse_mean_over_heads = jc.value("mse_mean_over_heads", true);
    cfg.mse_mean_over_layers = jc.value("mse_mean_over_layers", false);
    cfg.precision = jc.at("precision") == "f32" ? Precision::f32 : Precision::f64;
    cfg.mask_constant = jc.at("mask_constant");
    ToyModel model(cfg, 0);
    for (auto& p : model.params_) {
        const Matrix& stored = c.find(p.name);
        if (!stored.same_shape(p.value))
            throw IoError("ToyModel::load: shape mismatch for " + p.name);
        p.value = stored;
    }
    for (size_t layer = 0; layer < model.projections_.size(); ++layer) {
        auto proj = std::make_shared<ProjectionMatrix>();
        proj->p = c.find("proj.layer" + std::to_string(layer));
        model.projections_[layer] = std::move(proj);
    }
    return model;
}

}  // namespace dsattn
