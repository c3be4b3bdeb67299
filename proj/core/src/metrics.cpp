#include "gdgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <torch/torch.h>

#include "gdgan/error.hpp"

namespace gdgan {

std::pair<double, double> mean_and_sd(std::span<const double> values) {
    if (values.empty()) return {0.0, 0.0};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

InceptionScoreResult inception_score(std::span<const double> probabilities, std::size_t k, std::size_t n_splits) {
    if (k == 0 || probabilities.size() % k != 0) raise(ErrorKind::ShapeMismatch, "probability matrix is not [n, k]");
    const std::size_t n = probabilities.size() / k;
    if (n_splits == 0 || n == 0 || n % n_splits != 0)
        raise(ErrorKind::IndivisibleBatch,
              std::to_string(n) + " images cannot be split into " + std::to_string(n_splits) + " equal batches");
    const std::size_t per = n / n_splits;

    InceptionScoreResult result;
    std::vector<double> marginal(k);
    for (std::size_t s = 0; s < n_splits; ++s) {
        const double* batch = probabilities.data() + s * per * k;
        std::fill(marginal.begin(), marginal.end(), 0.0);
        for (std::size_t i = 0; i < per; ++i)
            for (std::size_t c = 0; c < k; ++c) marginal[c] += batch[i * k + c];
        for (auto& m : marginal) m /= static_cast<double>(per);

        double kl_sum = 0.0;
        for (std::size_t i = 0; i < per; ++i) {
            for (std::size_t c = 0; c < k; ++c) {
                const double p = batch[i * k + c];
                if (p > 0.0) kl_sum += p * (std::log(p) - std::log(marginal[c]));
            }
        }
        result.per_batch_scores.push_back(std::exp(kl_sum / static_cast<double>(per)));
    }
    std::tie(result.mean, result.sd) = mean_and_sd(result.per_batch_scores);
    return result;
}

InceptionScoreResult inception_score(const torch::Tensor& probabilities, std::size_t n_splits) {
    if (probabilities.dim() != 2) raise(ErrorKind::ShapeMismatch, "probabilities must be [n, k]");
    const auto p = probabilities.to(torch::kFloat64).contiguous();
    return inception_score(std::span<const double>(p.data_ptr<double>(), static_cast<std::size_t>(p.numel())),
                           static_cast<std::size_t>(p.size(1)), n_splits);
}

InceptionScoreResult inception_score(const ImageBatch& images, LabelProbabilityOracle& oracle, std::size_t n_splits,
                                     std::int64_t chunk) {
    const auto n = images.size();
    if (n_splits == 0 || n == 0 || n % static_cast<std::int64_t>(n_splits) != 0)
        raise(ErrorKind::IndivisibleBatch,
              std::to_string(n) + " images cannot be split into " + std::to_string(n_splits) + " equal batches");
    std::vector<torch::Tensor> parts;
    torch::NoGradGuard guard;
    for (std::int64_t start = 0; start < n; start += chunk) {
        const auto len = std::min(chunk, n - start);
        auto p = oracle.probabilities(images.data.narrow(0, start, len)).to(torch::kFloat64);
        if (p.dim() != 2 || p.size(0) != len || p.size(1) != oracle.num_classes())
            raise(ErrorKind::OracleFailure, oracle.descriptor() + " returned a malformed probability matrix");
        if (!torch::isfinite(p).all().item<bool>() || (p < 0).any().item<bool>() ||
            (p.sum(1) - 1.0).abs().max().item<double>() > 1e-5)
            raise(ErrorKind::OracleFailure, oracle.descriptor() + " returned rows that are not probability vectors");
        parts.push_back(p);
    }
    return inception_score(torch::cat(parts, 0), n_splits);
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) raise(ErrorKind::BadArgument, "incomplete beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    // The continued fraction converges fast for x < (a+1)/(a+b+2); use the
    // reflection I_x(a,b) = 1 − I_{1−x}(b,a) otherwise.
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);

    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double f = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        f *= d * c;
        num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return std::exp(log_front) * f / a;
}

double student_t_two_sided_p(double t, double dof) {
    if (!(dof > 0.0)) raise(ErrorKind::BadArgument, "degrees of freedom must be positive");
    if (std::isinf(t)) return 0.0;
    return regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) raise(ErrorKind::DegenerateSample, "each sample needs at least two values");
    const auto [ma, sa] = mean_and_sd(a);
    const auto [mb, sb] = mean_and_sd(b);
    if (sa == 0.0 || sb == 0.0) raise(ErrorKind::DegenerateSample, "sample variance is zero");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = sa * sa / na;
    const double vb = sb * sb / nb;
    WelchResult r;
    r.t = (ma - mb) / std::sqrt(va + vb);
    r.dof = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p_two_sided = std::min(1.0, student_t_two_sided_p(r.t, r.dof));
    return r;
}

std::string RocCurve::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "fpr,tpr,threshold\n";
    for (std::size_t i = 0; i < points.size(); ++i)
        os << points[i].first << ',' << points[i].second << ',' << thresholds[i] << '\n';
    return os.str();
}

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) raise(ErrorKind::ShapeMismatch, "scores and labels differ in length");
    std::size_t positives = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (std::isnan(scores[i])) raise(ErrorKind::BadArgument, "NaN score");
        positives += labels[i] != 0;
    }
    const std::size_t negatives = scores.size() - positives;
    if (positives == 0 || negatives == 0) raise(ErrorKind::SingleClass, "ROC needs both classes present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return scores[i] > scores[j]; });

    RocCurve roc;
    roc.points.emplace_back(0.0, 0.0);
    roc.thresholds.push_back(std::numeric_limits<double>::infinity());
    std::size_t tp = 0, fp = 0;
    double area2 = 0.0;  // twice the area, in units of (1/neg)·(1/pos)
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        const std::size_t tp0 = tp, fp0 = fp;
        for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] ? tp : fp)++;
        area2 += static_cast<double>(fp - fp0) * static_cast<double>(tp + tp0);
        roc.points.emplace_back(static_cast<double>(fp) / negatives, static_cast<double>(tp) / positives);
        roc.thresholds.push_back(s);
    }
    roc.auc = area2 / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
    return roc;
}

}  // namespace gdgan
