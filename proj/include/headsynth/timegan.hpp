#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "headsynth/adam.hpp"
#include "headsynth/errors.hpp"
#include "headsynth/layers.hpp"
#include "headsynth/quantile_transform.hpp"
#include "headsynth/rng.hpp"
#include "headsynth/tensor.hpp"
#include "headsynth/windows.hpp"

namespace headsynth {

// Thrown when a training loss stops being finite; the trainer is left in its
// last consistent state so the caller can persist a diagnostic checkpoint.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(const std::string& msg, std::size_t phase, std::size_t epoch)
        : std::runtime_error(msg), phase(phase), epoch(epoch) {}
    std::size_t phase;
    std::size_t epoch;
};

struct TimeGanConfig {
    std::size_t feature_dim = 3;
    std::size_t hidden_dim = 18; // latent width equals hidden width
    std::size_t gru_layers = 3;  // supervisor uses gru_layers - 1
    std::size_t seq_len = 25;
    double rate_hz = 50.0 / 3.0;

    double learning_rate = 0.001;
    double sup_weight = 100.0;          // generator: sup_weight * sqrt(supervised MSE)
    double moment_weight = 100.0;       // generator: moment_weight * (|mean diff| + |std diff|)
    double embed_recon_weight = 10.0;   // embedder fine-tune: weight * sqrt(reconstruction MSE)
    double embed_sup_weight = 0.1;      // embedder fine-tune: weight * supervised MSE
    double disc_threshold = 0.15;       // skip discriminator updates at or below this loss
    bool discriminate_unsupervised = false; // also discriminate raw generator latents
    double unsupervised_gamma = 1.0;

    std::size_t supervisor_layers() const { return gru_layers > 1 ? gru_layers - 1 : 1; }
};

struct TrainSchedule {
    std::size_t epochs_embedding = 1250;
    std::size_t epochs_supervised = 1250;
    std::size_t epochs_joint = 1250;
    std::size_t batch_size = 128;
    std::size_t snapshot_every = 10;
    std::size_t snapshot_multiplier = 10;
    std::uint64_t seed = 0;
};

// GRU stack with a dense head, the building block of all five sub-systems.
struct SeqNet {
    GruStack gru;
    DenseLayer head;

    struct Cache {
        GruCache gru;
        DenseCache head;
        std::size_t T = 0, B = 0;
    };
    struct Grads {
        GruGrads gru;
        DenseGrads head;
        void match(const SeqNet& n) {
            gru.match(n.gru);
            head.match(n.head);
        }
        void zero() {
            gru.zero();
            head.zero();
        }
    };

    static SeqNet make(std::size_t in, std::size_t hidden, std::size_t layers, std::size_t out,
                       Activation head_act, Rng& rng) {
        SeqNet n;
        n.gru = GruStack::glorot(in, hidden, layers, rng);
        n.head = DenseLayer::glorot(hidden, out, head_act, rng);
        return n;
    }

    // x: [T x B x in] -> [T x B x out]
    Tensor forward(const Tensor& x, Cache& c) const {
        Tensor h = gru_forward(gru, x, Tensor{}, c.gru);
        c.T = c.gru.T;
        c.B = c.gru.B;
        h.shape = {c.T * c.B, gru.hidden_dim};
        Tensor y = dense_forward(head, h, &c.head);
        y.shape = {c.T, c.B, head.out_dim()};
        return y;
    }

    // Accumulates parameter grads, returns grad wrt the input sequence.
    Tensor backward(const Cache& c, const Tensor& dy, Grads& g) const {
        Tensor dyf = dy;
        dyf.shape = {c.T * c.B, head.out_dim()};
        Tensor dh = dense_backward(head, c.head, dyf, g.head);
        dh.shape = {c.T, c.B, gru.hidden_dim};
        return gru_backward(gru, c.gru, dh, g.gru).grad_input;
    }
};

inline void collect_params(SeqNet& n, SeqNet::Grads& g, std::vector<Tensor*>& params,
                           std::vector<const Tensor*>& grads) {
    g.match(n);
    for (std::size_t l = 0; l < n.gru.layers.size(); ++l) {
        auto& P = n.gru.layers[l];
        auto& G = g.gru.layers[l];
        Tensor* ps[9] = {&P.wz, &P.wr, &P.wn, &P.uz, &P.ur, &P.un, &P.bz, &P.br, &P.bn};
        Tensor* gs[9] = {&G.wz, &G.wr, &G.wn, &G.uz, &G.ur, &G.un, &G.bz, &G.br, &G.bn};
        for (int i = 0; i < 9; ++i) {
            params.push_back(ps[i]);
            grads.push_back(gs[i]);
        }
    }
    params.push_back(&n.head.w);
    grads.push_back(&g.head.w);
    params.push_back(&n.head.b);
    grads.push_back(&g.head.b);
}

// The five sub-systems of the model. All share the Table-1 topology except
// the supervisor, which is one GRU layer shallower.
struct TimeGanModel {
    SeqNet embedder;      // features -> latent, sigmoid head
    SeqNet recovery;      // latent -> features, sigmoid head
    SeqNet generator;     // noise -> latent, sigmoid head
    SeqNet supervisor;    // latent -> next-step latent, identity head
    SeqNet discriminator; // latent -> per-step logit, identity head

    static TimeGanModel init(const TimeGanConfig& cfg, Rng& rng) {
        TimeGanModel m;
        const std::size_t H = cfg.hidden_dim;
        m.embedder = SeqNet::make(cfg.feature_dim, H, cfg.gru_layers, H, Activation::sigmoid, rng);
        m.recovery = SeqNet::make(H, H, cfg.gru_layers, cfg.feature_dim, Activation::sigmoid, rng);
        m.generator = SeqNet::make(cfg.feature_dim, H, cfg.gru_layers, H, Activation::sigmoid, rng);
        m.supervisor =
            SeqNet::make(H, H, cfg.supervisor_layers(), H, Activation::identity, rng);
        m.discriminator = SeqNet::make(H, H, cfg.gru_layers, 1, Activation::identity, rng);
        return m;
    }
};

// --- loss helpers

inline double mse_loss(const Tensor& pred, const Tensor& target, Tensor* dpred = nullptr,
                       double grad_scale = 1.0) {
    require_same_shape(pred, target, "mse_loss");
    const std::size_t n = pred.numel();
    if (dpred && !dpred->same_shape(pred)) *dpred = Tensor(pred.shape);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = pred.values[i] - target.values[i];
        sum += e * e;
        if (dpred) dpred->values[i] = grad_scale * 2.0 * e / static_cast<double>(n);
    }
    return sum / static_cast<double>(n);
}

// Mean binary cross-entropy with logits against a constant target.
inline double bce_logits(const Tensor& logits, double target, Tensor* dlogits = nullptr,
                         double grad_scale = 1.0) {
    const std::size_t n = logits.numel();
    if (dlogits && !dlogits->same_shape(logits)) *dlogits = Tensor(logits.shape);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = logits.values[i];
        sum += std::max(x, 0.0) - target * x + std::log1p(std::exp(-std::abs(x)));
        if (dlogits)
            dlogits->values[i] = grad_scale * (sigmoid(x) - target) / static_cast<double>(n);
    }
    return sum / static_cast<double>(n);
}

// Batch-moment matching between generated and real feature sequences:
// |mean diff| + |std diff| per (step, feature), averaged; moments are taken
// over the batch dimension with sqrt(var + 1e-6).
inline double moment_loss(const Tensor& xhat, const Tensor& x, Tensor* dxhat = nullptr,
                          double grad_scale = 1.0) {
    require_same_shape(xhat, x, "moment_loss");
    const std::size_t T = xhat.shape[0], B = xhat.shape[1], D = xhat.shape[2];
    if (dxhat && !dxhat->same_shape(xhat)) *dxhat = Tensor(xhat.shape);
    const double td = static_cast<double>(T * D);
    double loss = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t d = 0; d < D; ++d) {
            double mu_h = 0.0, mu_x = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                mu_h += xhat.at(t, b, d);
                mu_x += x.at(t, b, d);
            }
            mu_h /= static_cast<double>(B);
            mu_x /= static_cast<double>(B);
            double var_h = 0.0, var_x = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                var_h += (xhat.at(t, b, d) - mu_h) * (xhat.at(t, b, d) - mu_h);
                var_x += (x.at(t, b, d) - mu_x) * (x.at(t, b, d) - mu_x);
            }
            var_h /= static_cast<double>(B);
            var_x /= static_cast<double>(B);
            const double sd_h = std::sqrt(var_h + 1e-6);
            const double sd_x = std::sqrt(var_x + 1e-6);
            loss += std::abs(mu_h - mu_x) + std::abs(sd_h - sd_x);
            if (dxhat) {
                const double sgn_mu = mu_h > mu_x ? 1.0 : (mu_h < mu_x ? -1.0 : 0.0);
                const double sgn_sd = sd_h > sd_x ? 1.0 : (sd_h < sd_x ? -1.0 : 0.0);
                for (std::size_t b = 0; b < B; ++b) {
                    dxhat->at(t, b, d) =
                        grad_scale *
                        (sgn_mu / static_cast<double>(B) +
                         sgn_sd * (xhat.at(t, b, d) - mu_h) / (static_cast<double>(B) * sd_h)) /
                        td;
                }
            }
        }
    }
    return loss / td;
}

// Supervised stepwise loss: pred[t] against target[t+1], t = 0..T-2.
inline double supervised_mse(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "supervised_mse");
    const std::size_t T = pred.shape[0], rest = pred.shape[1] * pred.shape[2];
    if (T < 2) throw ArgumentError("supervised_mse: need at least 2 steps");
    const std::size_t n = (T - 1) * rest;
    double sum = 0.0;
    for (std::size_t t = 0; t + 1 < T; ++t)
        for (std::size_t i = 0; i < rest; ++i) {
            const double e = pred.values[t * rest + i] - target.values[(t + 1) * rest + i];
            sum += e * e;
        }
    return sum / static_cast<double>(n);
}

// d(supervised_mse)/d pred, scaled; optionally also the gradient wrt the
// target sequence (needed when the target itself is a trained embedding).
inline void supervised_mse_grads(const Tensor& pred, const Tensor& target, double grad_scale,
                                 Tensor* dpred, Tensor* dtarget = nullptr) {
    const std::size_t T = pred.shape[0], rest = pred.shape[1] * pred.shape[2];
    const std::size_t n = (T - 1) * rest;
    if (dpred && !dpred->same_shape(pred)) *dpred = Tensor(pred.shape);
    if (dpred) dpred->fill(0.0);
    if (dtarget && !dtarget->same_shape(target)) *dtarget = Tensor(target.shape);
    for (std::size_t t = 0; t + 1 < T; ++t)
        for (std::size_t i = 0; i < rest; ++i) {
            const double g = grad_scale * 2.0 *
                             (pred.values[t * rest + i] - target.values[(t + 1) * rest + i]) /
                             static_cast<double>(n);
            if (dpred) dpred->values[t * rest + i] = g;
            if (dtarget) dtarget->values[(t + 1) * rest + i] -= g;
        }
}

// --- trainer

struct JointLossRow {
    double g_adv = 0.0;      // generator adversarial cross-entropy
    double g_sup = 0.0;      // sqrt of supervised MSE
    double g_moment = 0.0;   // moment-matching loss
    double e_recon = 0.0;    // sqrt of reconstruction MSE
    double d_loss = 0.0;     // discriminator cross-entropy (measured every batch)
    std::size_t d_updates = 0;
};

// Drives the three training regimes, owns the optimizer states and the RNG
// stream, and is the unit of checkpointing. Training is a deterministic
// function of (dataset, config, schedule, seed).
class TimeGanTrainer {
public:
    TimeGanTrainer(const TimeGanConfig& cfg, const TrainSchedule& sched,
                   const TransformParams& transform, std::size_t real_window_count)
        : cfg_(cfg), sched_(sched), transform_(transform), real_count_(real_window_count),
          rng_(sched.seed) {
        Rng init_rng(sched.seed ^ 0x9e3779b97f4a7c15ULL);
        model_ = TimeGanModel::init(cfg, init_rng);
        for (AdamState* s : {&opt_er_pre_, &opt_s_, &opt_gs_, &opt_er_joint_, &opt_d_})
            s->learning_rate = cfg.learning_rate;
    }

    const TimeGanConfig& config() const { return cfg_; }
    const TrainSchedule& schedule() const { return sched_; }
    const TransformParams& transform() const { return transform_; }
    std::size_t real_window_count() const { return real_count_; }
    std::size_t phase() const { return phase_; }
    std::size_t epoch_in_phase() const { return epoch_; }
    TimeGanModel& model() { return model_; }
    const TimeGanModel& model() const { return model_; }

    // Runs the remaining embedding epochs (reconstruction MSE via Adam on
    // embedder + recovery). Returns the per-epoch mean loss curve.
    std::vector<double> run_embedding_phase(const WindowSet& w) {
        if (phase_ > 0) return {};
        check_input(w);
        std::vector<double> curve;
        while (epoch_ < sched_.epochs_embedding) {
            double loss_sum = 0.0;
            std::size_t count = 0;
            for_each_batch(w, [&](const Tensor& x) {
                SeqNet::Cache cE, cR;
                Tensor h = model_.embedder.forward(x, cE);
                Tensor xt = model_.recovery.forward(h, cR);
                Tensor dxt;
                const double loss = mse_loss(xt, x, &dxt);
                check_finite(loss, "embedding reconstruction");
                gE_.match(model_.embedder);
                gR_.match(model_.recovery);
                gE_.zero();
                gR_.zero();
                Tensor dh = model_.recovery.backward(cR, dxt, gR_);
                model_.embedder.backward(cE, dh, gE_);
                step_er(opt_er_pre_);
                loss_sum += loss * static_cast<double>(x.shape[1]);
                count += x.shape[1];
            });
            curve.push_back(loss_sum / static_cast<double>(count));
            ++epoch_;
        }
        phase_ = 1;
        epoch_ = 0;
        return curve;
    }

    // Supervised next-step training of the supervisor on embedded real data.
    std::vector<double> run_supervised_phase(const WindowSet& w) {
        if (phase_ < 1) throw ArgumentError("run_supervised_phase: embedding phase not completed");
        if (phase_ > 1) return {};
        check_input(w);
        std::vector<double> curve;
        while (epoch_ < sched_.epochs_supervised) {
            double loss_sum = 0.0;
            std::size_t count = 0;
            for_each_batch(w, [&](const Tensor& x) {
                SeqNet::Cache cE, cS;
                Tensor h = model_.embedder.forward(x, cE);
                Tensor s = model_.supervisor.forward(h, cS);
                const double loss = supervised_mse(s, h);
                check_finite(loss, "supervised");
                Tensor ds;
                supervised_mse_grads(s, h, 1.0, &ds);
                gS_.match(model_.supervisor);
                gS_.zero();
                model_.supervisor.backward(cS, ds, gS_);
                step_net(model_.supervisor, gS_, opt_s_);
                loss_sum += loss * static_cast<double>(x.shape[1]);
                count += x.shape[1];
            });
            curve.push_back(loss_sum / static_cast<double>(count));
            ++epoch_;
        }
        phase_ = 2;
        epoch_ = 0;
        return curve;
    }

    using SnapshotFn = std::function<void(std::size_t epoch, TimeGanTrainer& trainer)>;

    // Joint adversarial training: per batch, two (generator+supervisor,
    // embedder+recovery) update rounds, then one discriminator opportunity
    // gated by the cross-entropy threshold. Emits a snapshot callback every
    // snapshot_every epochs.
    std::vector<JointLossRow> run_joint_phase(const WindowSet& w,
                                              const SnapshotFn& on_snapshot = {}) {
        if (phase_ < 2) throw ArgumentError("run_joint_phase: earlier phases not completed");
        if (phase_ > 2) return {};
        check_input(w);
        std::vector<JointLossRow> curve;
        while (epoch_ < sched_.epochs_joint) {
            JointLossRow row;
            std::size_t batches = 0;
            for_each_batch(w, [&](const Tensor& x) {
                JointLossRow b = joint_batch(x);
                row.g_adv += b.g_adv;
                row.g_sup += b.g_sup;
                row.g_moment += b.g_moment;
                row.e_recon += b.e_recon;
                row.d_loss += b.d_loss;
                row.d_updates += b.d_updates;
                ++batches;
            });
            const double inv = 1.0 / static_cast<double>(batches);
            row.g_adv *= inv;
            row.g_sup *= inv;
            row.g_moment *= inv;
            row.e_recon *= inv;
            row.d_loss *= inv;
            curve.push_back(row);
            ++epoch_;
            if (on_snapshot && sched_.snapshot_every > 0 && epoch_ % sched_.snapshot_every == 0)
                on_snapshot(epoch_, *this);
        }
        phase_ = 3;
        return curve;
    }

    // Draws uniform noise, runs generator -> supervisor -> recovery, and
    // inverts the quantile transform back to degrees.
    WindowSet generate(std::size_t n, Rng rng) const {
        if (n < 1) throw ArgumentError("generate: n must be >= 1");
        const std::size_t T = cfg_.seq_len;
        WindowSet out = WindowSet::zeros(n, T, cfg_.rate_hz);
        out.space = "transformed01";
        std::size_t done = 0;
        while (done < n) {
            const std::size_t b = std::min<std::size_t>(256, n - done);
            Tensor z = draw_noise(T, b, rng);
            SeqNet::Cache cG, cS, cR;
            Tensor ehat = model_.generator.forward(z, cG);
            Tensor hhat = model_.supervisor.forward(ehat, cS);
            Tensor xhat = model_.recovery.forward(hhat, cR);
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t d = 0; d < 3; ++d)
                        out.at(done + i, t, d) = xhat.at(t, i, d);
            done += b;
        }
        return invert_transform(out, transform_);
    }

    WindowSet generate_seeded(std::size_t n, std::uint64_t seed) const {
        return generate(n, Rng(seed));
    }

    // Deterministic per-snapshot dataset: multiplier x real window count,
    // from a stream derived off the schedule seed and the epoch (so snapshot
    // content is independent of when checkpoints are taken).
    WindowSet snapshot_windows(std::size_t epoch) const {
        const std::size_t n = sched_.snapshot_multiplier * real_count_;
        return generate(n, Rng(sched_.seed).derive(0x534e4150u + epoch));
    }

    // One generator update on the first batch of `w` with the discriminator
    // frozen; reports the adversarial loss before and after on the same
    // batch and noise. Training state (RNG, optimizers) is advanced.
    std::pair<double, double> probe_generator_descent(const WindowSet& w) {
        check_input(w);
        Tensor x = gather_batch(w, first_indices(w));
        Rng probe_rng = rng_.derive(0x50524f42u);
        Tensor z = draw_noise(cfg_.seq_len, x.shape[1], probe_rng);
        const double before = generator_adversarial_loss(z);
        generator_update(x, z);
        const double after = generator_adversarial_loss(z);
        return {before, after};
    }

    // Checkpoint access (used by the serializer).
    struct State {
        std::size_t phase;
        std::size_t epoch;
        std::array<std::uint64_t, 4> rng_state;
    };
    State state() const { return {phase_, epoch_, rng_.state()}; }
    void restore_state(const State& s) {
        phase_ = s.phase;
        epoch_ = s.epoch;
        rng_.set_state(s.rng_state);
    }
    AdamState& optimizer(std::size_t i) {
        AdamState* opts[5] = {&opt_er_pre_, &opt_s_, &opt_gs_, &opt_er_joint_, &opt_d_};
        return *opts[i];
    }
    static constexpr std::size_t kOptimizerCount = 5;
    static constexpr const char* kOptimizerNames[5] = {"embed_pre", "supervised", "generator_joint",
                                                       "embed_joint", "discriminator"};

private:
    void check_input(const WindowSet& w) const {
        if (w.num_windows == 0) throw ArgumentError("training input: empty window set");
        if (w.window_len != cfg_.seq_len)
            throw ArgumentError("training input: window_len does not match configured seq_len");
        for (double v : w.data)
            if (v < -1e-6 || v > 1.0 + 1e-6)
                throw ArgumentError("training input: values outside [0, 1]; apply the transform first");
    }

    void check_finite(double loss, const char* what) const {
        if (!std::isfinite(loss))
            throw TrainingDiverged(std::string("non-finite ") + what + " loss at phase " +
                                       std::to_string(phase_) + ", epoch " + std::to_string(epoch_),
                                   phase_, epoch_);
    }

    std::vector<std::size_t> first_indices(const WindowSet& w) const {
        std::vector<std::size_t> idx(std::min(sched_.batch_size, w.num_windows));
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        return idx;
    }

    Tensor gather_batch(const WindowSet& w, const std::vector<std::size_t>& idx) const {
        const std::size_t T = w.window_len, B = idx.size();
        Tensor x({T, B, 3});
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t d = 0; d < 3; ++d) x.at(t, b, d) = w.at(idx[b], t, d);
        return x;
    }

    static Tensor draw_noise(std::size_t T, std::size_t B, Rng& rng) {
        Tensor z({T, B, 3});
        for (double& v : z.values) v = rng.uniform();
        return z;
    }

    // Shuffled full pass over the window set; last batch may be smaller.
    template <typename Fn> void for_each_batch(const WindowSet& w, Fn&& fn) {
        auto perm = rng_.permutation(w.num_windows);
        for (std::size_t start = 0; start < perm.size(); start += sched_.batch_size) {
            const std::size_t b = std::min(sched_.batch_size, perm.size() - start);
            std::vector<std::size_t> idx(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                         perm.begin() + static_cast<std::ptrdiff_t>(start + b));
            fn(gather_batch(w, idx));
        }
    }

    void step_er(AdamState& opt) {
        std::vector<Tensor*> params;
        std::vector<const Tensor*> grads;
        collect_params(model_.embedder, gE_, params, grads);
        collect_params(model_.recovery, gR_, params, grads);
        adam_step(params, grads, opt);
    }

    void step_net(SeqNet& net, SeqNet::Grads& g, AdamState& opt) {
        std::vector<Tensor*> params;
        std::vector<const Tensor*> grads;
        collect_params(net, g, params, grads);
        adam_step(params, grads, opt);
    }

    void step_gs(AdamState& opt) {
        std::vector<Tensor*> params;
        std::vector<const Tensor*> grads;
        collect_params(model_.generator, gG_, params, grads);
        collect_params(model_.supervisor, gS_, params, grads);
        adam_step(params, grads, opt);
    }

    double generator_adversarial_loss(const Tensor& z) const {
        SeqNet::Cache cG, cS, cD;
        Tensor ehat = model_.generator.forward(z, cG);
        Tensor hhat = model_.supervisor.forward(ehat, cS);
        Tensor logits = model_.discriminator.forward(hhat, cD);
        return bce_logits(logits, 1.0);
    }

    // Generator + supervisor update against the frozen discriminator,
    // recovery (moment path) and embedder (supervised target).
    struct GLosses {
        double adv, sup_sqrt, moment;
    };
    GLosses generator_update(const Tensor& x, const Tensor& z) {
        SeqNet::Cache cE, cS1, cG, cS2, cD, cR;
        Tensor h = model_.embedder.forward(x, cE);
        Tensor ssup = model_.supervisor.forward(h, cS1);
        Tensor ehat = model_.generator.forward(z, cG);
        Tensor hhat = model_.supervisor.forward(ehat, cS2);
        Tensor logits = model_.discriminator.forward(hhat, cD);
        Tensor xhat = model_.recovery.forward(hhat, cR);

        Tensor dlogits;
        const double l_adv = bce_logits(logits, 1.0, &dlogits);
        const double m_sup = supervised_mse(ssup, h);
        const double l_sup = std::sqrt(m_sup + 1e-12);
        Tensor dxhat;
        const double l_mom = moment_loss(xhat, x, &dxhat, cfg_.moment_weight);
        check_finite(l_adv + l_sup + l_mom, "generator");

        gG_.match(model_.generator);
        gS_.match(model_.supervisor);
        gG_.zero();
        gS_.zero();
        scratch_d_.match(model_.discriminator);
        scratch_d_.zero();
        scratch_r_.match(model_.recovery);
        scratch_r_.zero();

        Tensor dhhat = model_.discriminator.backward(cD, dlogits, scratch_d_);
        Tensor dhhat2 = model_.recovery.backward(cR, dxhat, scratch_r_);
        for (std::size_t i = 0; i < dhhat.numel(); ++i) dhhat.values[i] += dhhat2.values[i];
        Tensor dehat = model_.supervisor.backward(cS2, dhhat, gS_);

        if (cfg_.discriminate_unsupervised) {
            SeqNet::Cache cD2;
            Tensor logits_e = model_.discriminator.forward(ehat, cD2);
            Tensor dlogits_e;
            bce_logits(logits_e, 1.0, &dlogits_e, cfg_.unsupervised_gamma);
            scratch_d_.zero();
            Tensor de2 = model_.discriminator.backward(cD2, dlogits_e, scratch_d_);
            for (std::size_t i = 0; i < dehat.numel(); ++i) dehat.values[i] += de2.values[i];
        }
        model_.generator.backward(cG, dehat, gG_);

        // Supervised branch: gradient flows into the supervisor only (the
        // embedder is frozen in this update).
        Tensor dssup;
        supervised_mse_grads(ssup, h, cfg_.sup_weight / (2.0 * l_sup), &dssup);
        model_.supervisor.backward(cS1, dssup, gS_);

        step_gs(opt_gs_);
        return {l_adv, l_sup, l_mom};
    }

    // Embedder/recovery fine-tune: weighted sqrt-reconstruction plus the
    // supervised consistency term (supervisor frozen).
    double embedder_update(const Tensor& x) {
        SeqNet::Cache cE, cR, cS;
        Tensor h = model_.embedder.forward(x, cE);
        Tensor xt = model_.recovery.forward(h, cR);
        Tensor ssup = model_.supervisor.forward(h, cS);

        const double m_rec = mse_loss(xt, x);
        const double l_rec = std::sqrt(m_rec + 1e-12);
        check_finite(l_rec, "embedder reconstruction");

        gE_.match(model_.embedder);
        gR_.match(model_.recovery);
        gE_.zero();
        gR_.zero();
        scratch_s_.match(model_.supervisor);
        scratch_s_.zero();

        Tensor dxt;
        mse_loss(xt, x, &dxt, cfg_.embed_recon_weight / (2.0 * l_rec));
        Tensor dh = model_.recovery.backward(cR, dxt, gR_);

        Tensor dssup, dh_target;
        supervised_mse_grads(ssup, h, cfg_.embed_sup_weight, &dssup, &dh_target);
        Tensor dh_sup = model_.supervisor.backward(cS, dssup, scratch_s_);
        for (std::size_t i = 0; i < dh.numel(); ++i)
            dh.values[i] += dh_sup.values[i] + dh_target.values[i];

        model_.embedder.backward(cE, dh, gE_);
        step_er(opt_er_joint_);
        return l_rec;
    }

    // Discriminator opportunity: measure the cross-entropy on real-embedded
    // vs supervised-generated latents, update only above the threshold.
    std::pair<double, bool> discriminator_opportunity(const Tensor& x, const Tensor& z) {
        SeqNet::Cache cE, cG, cS, cDr, cDf;
        Tensor h = model_.embedder.forward(x, cE);
        Tensor ehat = model_.generator.forward(z, cG);
        Tensor hhat = model_.supervisor.forward(ehat, cS);
        Tensor logits_real = model_.discriminator.forward(h, cDr);
        Tensor logits_fake = model_.discriminator.forward(hhat, cDf);

        Tensor dreal, dfake;
        double loss = bce_logits(logits_real, 1.0, &dreal) + bce_logits(logits_fake, 0.0, &dfake);
        SeqNet::Cache cDe;
        Tensor dfake_e;
        if (cfg_.discriminate_unsupervised) {
            Tensor logits_e = model_.discriminator.forward(ehat, cDe);
            loss += cfg_.unsupervised_gamma * bce_logits(logits_e, 0.0, &dfake_e, cfg_.unsupervised_gamma);
        }
        check_finite(loss, "discriminator");

        if (loss <= cfg_.disc_threshold) return {loss, false};
        gD_.match(model_.discriminator);
        gD_.zero();
        model_.discriminator.backward(cDr, dreal, gD_);
        model_.discriminator.backward(cDf, dfake, gD_);
        if (cfg_.discriminate_unsupervised) model_.discriminator.backward(cDe, dfake_e, gD_);
        step_net(model_.discriminator, gD_, opt_d_);
        return {loss, true};
    }

    JointLossRow joint_batch(const Tensor& x) {
        JointLossRow row;
        for (int k = 0; k < 2; ++k) {
            Tensor z = draw_noise(cfg_.seq_len, x.shape[1], rng_);
            GLosses g = generator_update(x, z);
            row.g_adv += 0.5 * g.adv;
            row.g_sup += 0.5 * g.sup_sqrt;
            row.g_moment += 0.5 * g.moment;
            row.e_recon += 0.5 * embedder_update(x);
        }
        Tensor z = draw_noise(cfg_.seq_len, x.shape[1], rng_);
        auto [d_loss, updated] = discriminator_opportunity(x, z);
        row.d_loss = d_loss;
        row.d_updates = updated ? 1 : 0;
        return row;
    }

    TimeGanConfig cfg_;
    TrainSchedule sched_;
    TransformParams transform_;
    std::size_t real_count_ = 0;
    TimeGanModel model_;
    AdamState opt_er_pre_, opt_s_, opt_gs_, opt_er_joint_, opt_d_;
    SeqNet::Grads gE_, gR_, gG_, gS_, gD_, scratch_d_, scratch_r_, scratch_s_;
    std::size_t phase_ = 0;
    std::size_t epoch_ = 0;
    Rng rng_;
};

} // namespace headsynth
