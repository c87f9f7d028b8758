#include "atloss/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "atloss/error.hpp"
#include "atloss/format.hpp"
#include "atloss/loss_core.hpp"

namespace atloss::metrics {

ContingencyTable& ContingencyTable::operator+=(const ContingencyTable& o) noexcept {
    hits += o.hits;
    misses += o.misses;
    false_alarms += o.false_alarms;
    correct_negatives += o.correct_negatives;
    return *this;
}

std::string MetricValue::to_string() const { return value_ ? format_double(*value_) : "undefined"; }

ContingencyTable contingency(const FieldView& x, const FieldView& y, double theta) {
    require_same_shape(x, y, "contingency");
    ContingencyTable t;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int fx = step_indicator(x.values[i], theta);
        const int fy = step_indicator(y.values[i], theta);
        if (fx && fy) {
            ++t.hits;
        } else if (fx) {
            ++t.misses;
        } else if (fy) {
            ++t.false_alarms;
        } else {
            ++t.correct_negatives;
        }
    }
    return t;
}

namespace {

MetricValue ratio(double num, double den) {
    if (den == 0.0) return MetricValue::undefined();
    return MetricValue(num / den);
}

} // namespace

MetricValue csi(const ContingencyTable& t) {
    return ratio(static_cast<double>(t.hits), static_cast<double>(t.hits + t.misses + t.false_alarms));
}

CategoricalScores pod_far_hss(const ContingencyTable& t) {
    const auto h = static_cast<double>(t.hits);
    const auto m = static_cast<double>(t.misses);
    const auto fa = static_cast<double>(t.false_alarms);
    const auto cn = static_cast<double>(t.correct_negatives);
    CategoricalScores s;
    s.pod = ratio(h, h + m);
    s.far = ratio(fa, h + fa);
    s.hss = ratio(2.0 * (h * cn - m * fa), (h + m) * (m + cn) + (h + fa) * (fa + cn));
    return s;
}

ContinuousScores mae_psnr(const FieldView& a, const FieldView& b, double peak, double psnr_cap) {
    require_same_shape(a, b, "mae_psnr");
    if (!(peak > 0.0 && std::isfinite(peak))) throw InvalidParameter("mae_psnr: peak must be > 0");
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    const auto n = static_cast<double>(a.size());
    const double mse = sq_sum / n;
    const double psnr = mse == 0.0 ? psnr_cap : std::min(psnr_cap, 10.0 * std::log10(peak * peak / mse));
    return {abs_sum / n, psnr};
}

void MetricAccumulator::add(const MetricValue& v) {
    if (v.defined()) {
        sum_ += v.value();
        ++count_;
    } else {
        ++excluded_;
    }
}

MetricValue MetricAccumulator::mean() const {
    if (count_ == 0) return MetricValue::undefined();
    return MetricValue(sum_ / static_cast<double>(count_));
}

std::string MetricRow::csv_header() { return "threshold,lead_time,csi,hss,pod,far,mae,psnr"; }

std::string MetricRow::to_csv() const {
    std::string s;
    s += format_double(threshold);
    s += ',';
    s += format_double(lead_time);
    for (const MetricValue* v : {&csi, &hss, &pod, &far}) {
        s += ',';
        s += v->to_string();
    }
    s += ',';
    s += format_double(mae);
    s += ',';
    s += format_double(psnr);
    return s;
}

MetricRow evaluate_field(const FieldView& truth, const FieldView& forecast, double theta, double lead_time,
                         double peak) {
    const ContingencyTable t = contingency(truth, forecast, theta);
    const CategoricalScores s = pod_far_hss(t);
    const ContinuousScores c = mae_psnr(truth, forecast, peak);
    MetricRow row;
    row.threshold = theta;
    row.lead_time = lead_time;
    row.csi = csi(t);
    row.hss = s.hss;
    row.pod = s.pod;
    row.far = s.far;
    row.mae = c.mae;
    row.psnr = c.psnr;
    return row;
}

} // namespace atloss::metrics
