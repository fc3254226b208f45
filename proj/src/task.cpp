#include "dsattn/task.hpp"

#include <algorithm>
#include <cmath>

namespace dsattn {

void TaskSpec::validate() const {
    if (l < 8) throw ParamError("TaskSpec: l must be >= 8");
    if (vocab <= n_keys + n_keys * n_classes + 1)
        throw ParamError("TaskSpec: vocab too small for keys/targets plus fillers");
    if (l < n_distractors + 2) throw ParamError("TaskSpec: sequence too short for distractors");
    if (gap >= l) throw ParamError("TaskSpec: gap must be < l");
}

ToyTask make_toy_task(size_t l, size_t vocab, size_t n_samples, Rng& rng) {
    ToyTask task;
    task.spec.l = l;
    task.spec.vocab = vocab;
    task.spec.gap = std::max<size_t>(2, std::min<size_t>(16, l / 8));
    task.spec.validate();
    const TaskSpec& sp = task.spec;
    task.samples.reserve(n_samples);
    for (size_t s = 0; s < n_samples; ++s) {
        Sample smp;
        smp.tokens.resize(l);
        for (size_t i = 0; i < l; ++i)
            smp.tokens[i] = static_cast<uint32_t>(rng.uniform_int(sp.fillers()));
        const size_t key = rng.uniform_int(sp.n_keys);
        const size_t cls = rng.uniform_int(sp.n_classes);
        size_t q, t;
        do {
            q = rng.uniform_int(l);
            t = rng.uniform_int(l);
        } while (q == t || (q > t ? q - t : t - q) < sp.gap);
        smp.tokens[q] = sp.query_token(key);
        smp.tokens[t] = sp.target_token(key, cls);
        std::vector<size_t> used = {q, t};
        for (size_t d = 0; d < sp.n_distractors; ++d) {
            size_t p;
            do {
                p = rng.uniform_int(l);
            } while (std::find(used.begin(), used.end(), p) != used.end());
            used.push_back(p);
            size_t other_key;
            do {
                other_key = rng.uniform_int(sp.n_keys);
            } while (other_key == key);
            smp.tokens[p] = sp.target_token(other_key, rng.uniform_int(sp.n_classes));
        }
        smp.label = static_cast<uint32_t>(cls);
        smp.marker_pos = static_cast<uint32_t>(q);
        smp.target_pos = static_cast<uint32_t>(t);
        task.samples.push_back(std::move(smp));
    }
    return task;
}

uint32_t brute_force_read(const TaskSpec& spec, const std::vector<uint32_t>& tokens) {
    size_t key = spec.n_keys;
    for (uint32_t tok : tokens)
        if (spec.is_query(tok)) key = tok - spec.fillers();
    if (key == spec.n_keys) throw ParamError("brute_force_read: no marker present");
    for (uint32_t tok : tokens) {
        if (!spec.is_target(tok)) continue;
        const size_t idx = tok - spec.fillers() - spec.n_keys;
        if (idx / spec.n_classes == key) return static_cast<uint32_t>(idx % spec.n_classes);
    }
    throw ParamError("brute_force_read: no matching target present");
}

double bow_logistic_accuracy(const ToyTask& train, const ToyTask& eval, size_t steps, double lr,
                             Rng& rng) {
    const size_t v = train.spec.vocab;
    const size_t c = train.spec.n_classes;
    std::vector<double> w(v * c, 0.0), bias(c, 0.0);
    std::vector<double> counts(v), logits(c), p(c);
    for (size_t step = 0; step < steps; ++step) {
        const Sample& s = train.samples[rng.uniform_int(train.samples.size())];
        std::fill(counts.begin(), counts.end(), 0.0);
        for (uint32_t tok : s.tokens) counts[tok] += 1.0;
        double m = -1e300;
        for (size_t k = 0; k < c; ++k) {
            logits[k] = bias[k];
            for (size_t j = 0; j < v; ++j) logits[k] += w[j * c + k] * counts[j];
            m = std::max(m, logits[k]);
        }
        double sum = 0.0;
        for (size_t k = 0; k < c; ++k) sum += (p[k] = std::exp(logits[k] - m));
        for (size_t k = 0; k < c; ++k) {
            const double g = p[k] / sum - (k == s.label ? 1.0 : 0.0);
            bias[k] -= lr * g;
            for (size_t j = 0; j < v; ++j)
                if (counts[j] != 0.0) w[j * c + k] -= lr * g * counts[j];
        }
    }
    size_t correct = 0;
    for (const Sample& s : eval.samples) {
        std::fill(counts.begin(), counts.end(), 0.0);
        for (uint32_t tok : s.tokens) counts[tok] += 1.0;
        size_t best = 0;
        double bestv = -1e300;
        for (size_t k = 0; k < c; ++k) {
            double z = bias[k];
            for (size_t j = 0; j < v; ++j) z += w[j * c + k] * counts[j];
            if (z > bestv) {
                bestv = z;
                best = k;
            }
        }
        correct += best == s.label;
    }
    return static_cast<double>(correct) / static_cast<double>(eval.samples.size());
}

}  // namespace dsattn
