#include "atloss/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "atloss/error.hpp"
#include "atloss/format.hpp"
#include "atloss/random.hpp"

namespace atloss::train {

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::at: return "at";
        case LossKind::mae: return "mae";
        case LossKind::mse: return "mse";
        case LossKind::huber: return "huber";
        case LossKind::charbonnier: return "charbonnier";
    }
    return "?";
}

LossKind parse_loss_kind(std::string_view s) {
    if (s == "at") return LossKind::at;
    if (s == "mae") return LossKind::mae;
    if (s == "mse") return LossKind::mse;
    if (s == "huber") return LossKind::huber;
    if (s == "charbonnier") return LossKind::charbonnier;
    throw InvalidParameter("unknown loss '" + std::string(s) + "'");
}

std::string_view to_string(Track track) { return track == Track::clean ? "clean" : "dirty"; }

Track parse_track(std::string_view s) {
    if (s == "clean") return Track::clean;
    if (s == "dirty") return Track::dirty;
    throw InvalidParameter("unknown track '" + std::string(s) + "'");
}

BaselineLossKind baseline_for(LossKind kind, double huber_delta, double charbonnier_epsilon) {
    BaselineLossKind b{BaselineKind::mse, huber_delta, charbonnier_epsilon};
    switch (kind) {
        case LossKind::mae: b.kind = BaselineKind::mae; break;
        case LossKind::mse: b.kind = BaselineKind::mse; break;
        case LossKind::huber: b.kind = BaselineKind::huber; break;
        case LossKind::charbonnier: b.kind = BaselineKind::charbonnier; break;
        case LossKind::at: throw InvalidParameter("the AT loss has no baseline settings");
    }
    return b;
}

void TrainConfig::validate() const {
    if (epochs < 0) throw InvalidParameter("epochs must be >= 0");
    if (batch_size == 0) throw InvalidParameter("batch_size must be >= 1");
    if (input_frames == 0 || input_frames >= data::kWindowLength) {
        throw InvalidParameter("input_frames must lie in [1, " + std::to_string(data::kWindowLength - 1) + "]");
    }
    if (hidden_channels == 0) throw InvalidParameter("hidden_channels must be >= 1");
    schedule.validate();
    adam.validate();
    if (loss == LossKind::at) {
        AtLossParams p = at.with_tau(schedule.tau_start);
        p.tau_floor = schedule.tau_floor;
        p.validate();
    } else {
        baseline_for(loss, huber_delta, charbonnier_epsilon).validate();
    }
    if (track == Track::dirty && !noise) throw InvalidParameter("the dirty track requires a noise spec");
    if (track == Track::clean && noise) throw InvalidParameter("the clean track must not carry a noise spec");
    if (noise) noise->validate();
}

bool TrainConfig::same_except_track(const TrainConfig& o) const {
    return loss == o.loss && at == o.at && huber_delta == o.huber_delta &&
           charbonnier_epsilon == o.charbonnier_epsilon && schedule == o.schedule && epochs == o.epochs &&
           batch_size == o.batch_size && adam == o.adam && seed == o.seed && input_frames == o.input_frames &&
           hidden_channels == o.hidden_channels;
}

nn::CnnModel<float> initial_model(const TrainConfig& config) {
    nn::CnnConfig cc;
    cc.in_channels = config.input_frames;
    cc.hidden_channels = config.hidden_channels;
    nn::CnnModel<float> model(cc);
    model.init_uniform_fan_in(derive_seed(config.seed, 0x1417));
    return model;
}

namespace {

// Fills batch slot `slot` of `input` with the normalized input frames of `window`.
void load_inputs(std::span<const GridField> window, std::size_t input_frames, const data::NormalizationSpec& norm,
                 const std::optional<data::NoiseSpec>& noise, std::uint64_t noise_seed, nn::Tensor4<float>& input,
                 std::size_t slot) {
    const std::size_t first = window.size() - 1 - input_frames;
    for (std::size_t f = 0; f < input_frames; ++f) {
        const GridField& frame = window[first + f];
        auto dst = input.plane(slot, f);
        if (noise) {
            data::NoiseSpec spec = *noise;
            spec.seed = derive_seed(noise_seed, f);
            spec.value_min = norm.physical_min;
            spec.value_max = norm.physical_max;
            const GridField noisy = data::inject_noise(frame, spec);
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(norm.normalize(noisy.values()[i]));
        } else {
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(norm.normalize(frame.values()[i]));
        }
    }
}

struct Validation {
    metrics::MetricValue csi, hss, pod, far;
};

Validation validate_model(const nn::CnnModel<float>& model, const data::WindowedDataset& val,
                          const data::NormalizationSpec& norm, std::size_t input_frames, double theta) {
    const auto forecasts = predict(model, val, norm, input_frames);
    metrics::MetricAccumulator csi, hss, pod, far;
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        const GridField& truth = val.window(i).back();
        const FieldView fc(truth.height(), truth.width(), forecasts[i]);
        const auto table = metrics::contingency(truth, fc, theta);
        const auto s = metrics::pod_far_hss(table);
        csi.add(metrics::csi(table));
        hss.add(s.hss);
        pod.add(s.pod);
        far.add(s.far);
    }
    return {csi.mean(), hss.mean(), pod.mean(), far.mean()};
}

} // namespace

TrainResult train(const TrainConfig& config, const data::WindowedDataset& dataset,
                  const data::WindowedDataset* validation) {
    config.validate();
    if (dataset.empty()) throw InvalidInput("training dataset is empty");
    if (dataset.window_length() != data::kWindowLength) throw InvalidInput("training windows must have 6 steps");

    const data::NormalizationSpec& norm = dataset.norm();
    const std::size_t h = dataset.height();
    const std::size_t w = dataset.width();
    const std::size_t plane = h * w;
    const std::size_t count = dataset.size();
    const double theta = config.at.theta;

    TrainResult result{initial_model(config), {}};
    nn::CnnModel<float>& model = result.model;
    nn::Adam<float> adam(model, config.adam);
    nn::ForwardCache<float> cache;

    std::vector<std::size_t> order(count);
    std::vector<double> target;
    std::vector<double> prediction;
    std::vector<double> grad;
    std::uint64_t step = 0;
    const std::uint64_t z_seed = derive_seed(config.seed, config.at.seed);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double tau = anneal_tau(config.schedule, epoch);
        AtLossParams at = config.at.with_tau(tau);
        at.tau_floor = config.schedule.tau_floor;
        at.seed = z_seed;
        const BaselineLossKind baseline = config.loss == LossKind::at
                                              ? BaselineLossKind{}
                                              : baseline_for(config.loss, config.huber_delta, config.charbonnier_epsilon);

        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle(derive_seed(config.seed, 0x5u, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[shuffle.index(i)]);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < count; start += config.batch_size) {
            const std::size_t b = std::min(config.batch_size, count - start);
            nn::Tensor4<float> input(b, config.input_frames, h, w);
            target.resize(b * plane);
            for (std::size_t s = 0; s < b; ++s) {
                const std::size_t idx = order[start + s];
                const auto window = dataset.window(idx);
                const std::uint64_t noise_seed =
                    config.noise ? derive_seed(config.noise->seed, static_cast<std::uint64_t>(epoch), idx) : 0;
                load_inputs(window, config.input_frames, norm, config.noise, noise_seed, input, s);
                const auto truth = window.back().values();
                for (std::size_t i = 0; i < plane; ++i) {
                    target[s * plane + i] = config.loss == LossKind::at ? truth[i] : norm.normalize(truth[i]);
                }
            }

            const nn::Tensor4<float> out = nn::forward(model, input, &cache);
            prediction.resize(out.size());
            grad.resize(out.size());
            const auto raw = out.data();
            const FieldView truth_view(b * h, w, target);
            double value = 0.0;
            if (config.loss == LossKind::at) {
                for (std::size_t i = 0; i < raw.size(); ++i) prediction[i] = norm.denormalize(raw[i]);
                if (!std::all_of(prediction.begin(), prediction.end(), [](double v) { return std::isfinite(v); })) {
                    throw NonFiniteLoss("epoch " + std::to_string(epoch) + ": non-finite model output");
                }
                value = at_loss_into(truth_view, FieldView(b * h, w, prediction), at, step, grad);
                const double chain = norm.scale();
                for (double& g : grad) g *= chain;
            } else {
                for (std::size_t i = 0; i < raw.size(); ++i) prediction[i] = raw[i];
                if (!std::all_of(prediction.begin(), prediction.end(), [](double v) { return std::isfinite(v); })) {
                    throw NonFiniteLoss("epoch " + std::to_string(epoch) + ": non-finite model output");
                }
                value = baseline_loss_into(truth_view, FieldView(b * h, w, prediction), baseline, grad);
            }
            if (!std::isfinite(value)) {
                throw NonFiniteLoss("epoch " + std::to_string(epoch) + ", batch at " + std::to_string(start) +
                                    ": loss evaluated to " + format_double(value));
            }
            loss_sum += value * static_cast<double>(b);

            nn::Tensor4<float> upstream(out.shape());
            auto up = upstream.data();
            // Saturated cells give gradients far below float range; subnormals would
            // crawl through the backward pass, so they are flushed to zero.
            for (std::size_t i = 0; i < up.size(); ++i) {
                up[i] = std::abs(grad[i]) < static_cast<double>(std::numeric_limits<float>::min())
                            ? 0.0f
                            : static_cast<float>(grad[i]);
            }
            const auto grads = nn::backward(model, cache, upstream);
            adam.step(model, grads);
            ++step;
        }

        EpochLog entry;
        entry.epoch = epoch;
        if (config.loss == LossKind::at) entry.tau = tau;
        entry.train_loss = loss_sum / static_cast<double>(count);
        if (validation && !validation->empty()) {
            const Validation v = validate_model(model, *validation, norm, config.input_frames, theta);
            entry.val_csi = v.csi;
            entry.val_hss = v.hss;
            entry.val_pod = v.pod;
            entry.val_far = v.far;
        }
        result.log.push_back(entry);
    }
    return result;
}

std::vector<std::vector<double>> predict(const nn::CnnModel<float>& model, const data::WindowedDataset& eval_set,
                                         const data::NormalizationSpec& norm, std::size_t input_frames) {
    constexpr std::size_t kChunk = 16;
    const std::size_t h = eval_set.height();
    const std::size_t w = eval_set.width();
    std::vector<std::vector<double>> out;
    out.reserve(eval_set.size());
    nn::ForwardCache<float> cache;
    for (std::size_t start = 0; start < eval_set.size(); start += kChunk) {
        const std::size_t b = std::min(kChunk, eval_set.size() - start);
        nn::Tensor4<float> input(b, input_frames, h, w);
        for (std::size_t s = 0; s < b; ++s) {
            load_inputs(eval_set.window(start + s), input_frames, norm, std::nullopt, 0, input, s);
        }
        const nn::Tensor4<float> y = nn::forward(model, input, &cache);
        for (std::size_t s = 0; s < b; ++s) {
            const auto p = y.plane(s, 0);
            std::vector<double> field(p.size());
            // Forecasts are rain rates: negative model output means no rain.
            for (std::size_t i = 0; i < p.size(); ++i) field[i] = std::max(0.0, norm.denormalize(p[i]));
            out.push_back(std::move(field));
        }
    }
    return out;
}

metrics::ContinuousScores compare_forecasts(const std::vector<std::vector<double>>& a,
                                            const std::vector<std::vector<double>>& b, double peak) {
    if (a.size() != b.size()) throw DimensionError("forecast sets differ in length");
    std::vector<double> fa;
    std::vector<double> fb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) throw DimensionError("forecast fields differ in size");
        fa.insert(fa.end(), a[i].begin(), a[i].end());
        fb.insert(fb.end(), b[i].begin(), b[i].end());
    }
    if (fa.empty()) throw InvalidInput("no forecasts to compare");
    return metrics::mae_psnr(FieldView(1, fa.size(), fa), FieldView(1, fb.size(), fb), peak);
}

ConsistencyResult consistency_experiment(const TrainConfig& clean, const TrainConfig& dirty,
                                         const data::WindowedDataset& dataset, const data::WindowedDataset& eval_set) {
    if (clean.track != Track::clean || dirty.track != Track::dirty) {
        throw InvalidParameter("consistency experiment needs one clean and one dirty config");
    }
    if (!clean.same_except_track(dirty)) {
        throw InvalidParameter("clean and dirty configs may differ only in track and noise");
    }
    ConsistencyResult r;
    r.clean = train(clean, dataset);
    r.dirty = train(dirty, dataset);
    const auto& norm = dataset.norm();
    const auto fc = predict(r.clean.model, eval_set, norm, clean.input_frames);
    const auto fd = predict(r.dirty.model, eval_set, norm, dirty.input_frames);
    const auto scores = compare_forecasts(fc, fd, norm.range());
    r.mae = scores.mae;
    r.psnr = scores.psnr;
    return r;
}

std::string metric_log_csv(const std::vector<EpochLog>& log) {
    std::string s = "epoch,tau,train_loss,val_csi,val_hss,val_pod,val_far\n";
    for (const EpochLog& e : log) {
        s += std::to_string(e.epoch);
        s += ',';
        s += e.tau ? format_double(*e.tau) : std::string("n/a");
        s += ',';
        s += format_double(e.train_loss);
        for (const auto* v : {&e.val_csi, &e.val_hss, &e.val_pod, &e.val_far}) {
            s += ',';
            s += v->to_string();
        }
        s += '\n';
    }
    return s;
}

} // namespace atloss::train
