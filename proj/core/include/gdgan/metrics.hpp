#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <torch/types.h>

#include "gdgan/image.hpp"

namespace gdgan {

/// p(y|x) provider used by the inception score. Implementations return
/// [n, K] non-negative rows summing to 1 and must tolerate concurrent calls
/// or say otherwise in their descriptor.
class LabelProbabilityOracle {
public:
    virtual ~LabelProbabilityOracle() = default;
    virtual torch::Tensor probabilities(const torch::Tensor& images) = 0;
    virtual int num_classes() const = 0;
    virtual std::string descriptor() const = 0;
};

struct InceptionScoreResult {
    std::vector<double> per_batch_scores;
    double mean = 0.0;
    double sd = 0.0;  // sample SD (n − 1)
};

/// Mean and sample standard deviation (n − 1; 0 for a single value).
std::pair<double, double> mean_and_sd(std::span<const double> values);

/// Inception score from a row-major [n, k] probability matrix: the rows are cut
/// into n_splits consecutive batches and each batch scores
/// exp(mean_x KL(p(y|x) ‖ p(y))) with p(y) the batch marginal. Throws
/// IndivisibleBatch when n is not a multiple of n_splits.
InceptionScoreResult inception_score(std::span<const double> probabilities, std::size_t k, std::size_t n_splits);
InceptionScoreResult inception_score(const torch::Tensor& probabilities, std::size_t n_splits);
/// Queries the oracle in chunks of `chunk` images, validating every row (OracleFailure).
InceptionScoreResult inception_score(const ImageBatch& images, LabelProbabilityOracle& oracle, std::size_t n_splits,
                                     std::int64_t chunk = 500);

/// Regularized incomplete beta I_x(a, b) by continued fraction (modified Lentz).
double regularized_incomplete_beta(double a, double b, double x);
/// Two-sided tail P(|T| ≥ |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

struct WelchResult {
    double t = 0.0;
    double dof = 0.0;
    double p_two_sided = 1.0;
};

/// Welch's unequal-variance t-test. Throws DegenerateSample when either sample
/// has fewer than two values or zero variance.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct RocCurve {
    /// (false positive rate, true positive rate), from (0,0) to (1,1).
    std::vector<std::pair<double, double>> points;
    /// thresholds[i] is the score cut for points[i] (score ≥ cut ⇒ positive);
    /// thresholds[0] is +infinity.
    std::vector<double> thresholds;
    double auc = 0.0;

    std::string to_csv() const;
};

/// Sweeps every distinct score in descending order; tied scores cross the
/// threshold together. AUC is the trapezoidal area. Throws SingleClass when
/// only one class is present.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

}  // namespace gdgan
