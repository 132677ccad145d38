#include "dsi/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "dsi/kernels.hpp"

namespace dsi {

namespace {

// total_steps < 0 means the predictor is schedule-agnostic; only t >= 1 is
// enforced (t = 0 is clean data, never a prediction time).
void check_predict_args(const Shape& declared, const LatentArray& z, int t, int total_steps) {
    if (z.shape != declared) {
        throw std::invalid_argument("predictor input shape " + shape_to_string(z.shape) +
                                    " does not match declared " + shape_to_string(declared));
    }
    if (t < 1 || (total_steps >= 0 && t > total_steps)) {
        throw std::out_of_range("predictor time " + std::to_string(t) + " out of range");
    }
}

}  // namespace

ConditionId ConditionId::component(int index) {
    if (index < 0) {
        throw std::invalid_argument("component condition index must be non-negative");
    }
    return ConditionId(index);
}

ConditionId ConditionId::from_raw(int raw) {
    if (raw < kUnconditionalRaw) {
        throw std::invalid_argument("bad raw condition id " + std::to_string(raw));
    }
    return ConditionId(raw);
}

int ConditionId::index() const {
    if (is_unconditional()) {
        throw std::logic_error("unconditional condition has no component index");
    }
    return raw_;
}

LatentArray cfg_combine(const LatentArray& eps_cond, const LatentArray& eps_uncond, double w) {
    require_same_shape(eps_cond, eps_uncond, "cfg_combine");
    LatentArray out = LatentArray::zeros(eps_cond.shape);
    kernel::lerp_combine(out.view(), w, eps_cond.view(), eps_uncond.view());
    return out;
}

LatentArray guided_predict(const NoisePredictor& predictor, const LatentArray& z, int t,
                           const GuidanceSpec& guidance) {
    if (guidance.scale == 1.0) {
        return predictor.predict(z, t, guidance.condition);
    }
    LatentArray cond = predictor.predict(z, t, guidance.condition);
    LatentArray uncond = predictor.predict(z, t, ConditionId::unconditional());
    return cfg_combine(cond, uncond, guidance.scale);
}

ZeroPredictor::ZeroPredictor(Shape shape) : shape_(std::move(shape)) {}

LatentArray ZeroPredictor::predict(const LatentArray& z, int t, ConditionId) const {
    check_predict_args(shape_, z, t, -1);
    return LatentArray::zeros(shape_);
}

ProceduralPredictor::ProceduralPredictor(Shape shape) : shape_(std::move(shape)) {}

LatentArray ProceduralPredictor::predict(const LatentArray& z, int t, ConditionId condition) const {
    check_predict_args(shape_, z, t, -1);
    const double c_index = condition.is_unconditional()
                               ? -1.0
                               : static_cast<double>(condition.index());
    LatentArray out = LatentArray::zeros(shape_);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(out.size());
    const double* zi = z.data();
    double* oi = out.data();
    const double phase0 = 0.01 * static_cast<double>(t) + 17.0 * c_index;
#pragma omp parallel for schedule(static) if (n >= (1 << 12))
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        oi[i] = std::tanh(0.3 * zi[i] + 0.1 * std::sin(phase0 + static_cast<double>(i)));
    }
    return out;
}

GaussianMixturePredictor::GaussianMixturePredictor(DiffusionSchedule schedule,
                                                   std::vector<MixtureComponent> components)
    : schedule_(std::move(schedule)), components_(std::move(components)) {
    if (components_.empty()) {
        throw std::invalid_argument("mixture needs at least one component");
    }
    shape_ = components_.front().mean.shape;
    double weight_sum = 0.0;
    for (const auto& c : components_) {
        if (c.mean.shape != shape_) {
            throw std::invalid_argument("mixture component shapes must be identical");
        }
        if (!(c.variance > 0.0)) {
            throw std::invalid_argument("mixture component variance must be positive");
        }
        if (!(c.weight > 0.0)) {
            throw std::invalid_argument("mixture component weight must be positive");
        }
        weight_sum += c.weight;
    }
    if (std::fabs(weight_sum - 1.0) > 1e-12) {
        throw std::invalid_argument("mixture weights must sum to 1 (got " +
                                    std::to_string(weight_sum) + ")");
    }
}

std::vector<double> GaussianMixturePredictor::responsibilities(const LatentArray& z, int t) const {
    check_predict_args(shape_, z, t, schedule_.total_steps());
    const double abar = schedule_.alpha_bar(t);
    const double sqrt_abar = std::sqrt(abar);
    const std::size_t n = z.size();
    const std::size_t k_count = components_.size();

    // log densities under N(sqrt(abar)*mu_k, (abar*sigma0k^2 + 1 - abar) I),
    // max-subtracted before exponentiation; at t near the schedule top the
    // likelihoods are nearly flat and naive exponentiation underflows.
    std::vector<double> log_density(k_count);
    const std::ptrdiff_t kc = static_cast<std::ptrdiff_t>(k_count);
#pragma omp parallel for schedule(static) if (kc > 1)
    for (std::ptrdiff_t k = 0; k < kc; ++k) {
        const auto& comp = components_[static_cast<std::size_t>(k)];
        const double var = abar * comp.variance + (1.0 - abar);
        if (!(var > 0.0)) {
            throw std::domain_error("degenerate marginal covariance in mixture");
        }
        const double sq =
            kernel::sum_sq_scaled_diff(z.view(), sqrt_abar, comp.mean.view());
        log_density[static_cast<std::size_t>(k)] =
            std::log(comp.weight) -
            0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * var) -
            0.5 * sq / var;
    }

    const double max_log = *std::max_element(log_density.begin(), log_density.end());
    std::vector<double> resp(k_count);
    double norm = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
        resp[k] = std::exp(log_density[k] - max_log);
        norm += resp[k];
    }
    for (double& r : resp) r /= norm;
    return resp;
}

LatentArray GaussianMixturePredictor::predict(const LatentArray& z, int t,
                                              ConditionId condition) const {
    check_predict_args(shape_, z, t, schedule_.total_steps());

    std::vector<double> resp;
    if (condition.is_unconditional()) {
        resp = responsibilities(z, t);
    } else {
        const int k = condition.index();
        if (k >= static_cast<int>(components_.size())) {
            throw std::invalid_argument("unknown mixture condition " + std::to_string(k));
        }
        resp.assign(components_.size(), 0.0);
        resp[static_cast<std::size_t>(k)] = 1.0;
    }

    const double abar = schedule_.alpha_bar(t);
    const double sqrt_abar = std::sqrt(abar);
    const double one_minus = 1.0 - abar;
    const double inv_sqrt_noise = 1.0 / std::sqrt(one_minus);  // t >= 1, so 1 - abar > 0

    const std::size_t k_count = components_.size();
    std::vector<double> shrink(k_count);  // posterior-mean gain per component
    for (std::size_t k = 0; k < k_count; ++k) {
        const double var = abar * components_[k].variance + one_minus;
        if (!(var > 0.0)) {
            throw std::domain_error("degenerate marginal covariance in mixture");
        }
        shrink[k] = sqrt_abar * components_[k].variance / var;
    }

    // eps = (z - sqrt(abar) * m) / sqrt(1 - abar) with
    // m = sum_k r_k * (mu_k + shrink_k * (z - sqrt(abar) * mu_k)).
    LatentArray out = LatentArray::zeros(shape_);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(z.size());
    const double* zi = z.data();
    double* oi = out.data();
#pragma omp parallel for schedule(static) if (n >= (1 << 12))
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double m = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
            if (resp[k] == 0.0) continue;
            const double mu = components_[k].mean.values[static_cast<std::size_t>(i)];
            m += resp[k] * (mu + shrink[k] * (zi[i] - sqrt_abar * mu));
        }
        oi[i] = (zi[i] - sqrt_abar * m) * inv_sqrt_noise;
    }
    return out;
}

}  // namespace dsi
