#pragma once

#include <memory>
#include <vector>

#include "dsi/latent.hpp"
#include "dsi/schedule.hpp"

namespace dsi {

// Abstract condition label: either a non-negative component index (standing
// in for a text embedding) or the distinguished unconditional slot.
class ConditionId {
public:
    static constexpr int kUnconditionalRaw = -1;

    static ConditionId unconditional() { return ConditionId(kUnconditionalRaw); }
    static ConditionId component(int index);

    // -1 means unconditional; used for serialization.
    static ConditionId from_raw(int raw);
    int raw() const { return raw_; }

    bool is_unconditional() const { return raw_ == kUnconditionalRaw; }
    int index() const;  // throws std::logic_error when unconditional

    bool operator==(const ConditionId&) const = default;

private:
    explicit ConditionId(int raw) : raw_(raw) {}
    int raw_ = kUnconditionalRaw;
};

struct GuidanceSpec {
    double scale = 1.0;
    ConditionId condition = ConditionId::unconditional();
};

// eps_theta(z, t, condition): deterministic, same-shape output. Every
// implementation is a pure function of its inputs; identical inputs yield
// identical outputs (required by the reversibility tests).
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;

    // Pre: 1 <= t <= schedule length, z shape matches shape().
    virtual LatentArray predict(const LatentArray& z, int t, ConditionId condition) const = 0;

    virtual const Shape& shape() const = 0;
};

// w*eps_cond + (1-w)*eps_uncond elementwise.
LatentArray cfg_combine(const LatentArray& eps_cond, const LatentArray& eps_uncond, double w);

// Applies classifier-free guidance around a raw predictor. At scale == 1 the
// unconditional branch is skipped entirely.
LatentArray guided_predict(const NoisePredictor& predictor, const LatentArray& z, int t,
                           const GuidanceSpec& guidance);

// eps = 0 for every input.
class ZeroPredictor : public NoisePredictor {
public:
    explicit ZeroPredictor(Shape shape);
    LatentArray predict(const LatentArray& z, int t, ConditionId condition) const override;
    const Shape& shape() const override { return shape_; }

private:
    Shape shape_;
};

// Smooth deterministic z-dependent stand-in used by the reversibility
// stress tests:
//   eps(z, t, c)[i] = tanh(0.3*z[i] + 0.1*sin(0.01*t + i + 17*c_index))
// with c_index = -1 for the unconditional slot.
class ProceduralPredictor : public NoisePredictor {
public:
    explicit ProceduralPredictor(Shape shape);
    LatentArray predict(const LatentArray& z, int t, ConditionId condition) const override;
    const Shape& shape() const override { return shape_; }

private:
    Shape shape_;
};

struct MixtureComponent {
    LatentArray mean;
    double variance = 1.0;  // sigma0^2, isotropic
    double weight = 1.0;
};

// Exact Bayes-optimal noise predictor for data drawn from a known Gaussian
// mixture. Conditioning on component k locks the responsibilities to that
// component; the unconditional slot marginalizes over all of them.
class GaussianMixturePredictor : public NoisePredictor {
public:
    GaussianMixturePredictor(DiffusionSchedule schedule, std::vector<MixtureComponent> components);

    LatentArray predict(const LatentArray& z, int t, ConditionId condition) const override;
    const Shape& shape() const override { return shape_; }

    // Posterior component probabilities at time t, computed in log space
    // with max-subtraction. Sums to 1.
    std::vector<double> responsibilities(const LatentArray& z, int t) const;

    const std::vector<MixtureComponent>& components() const { return components_; }
    const DiffusionSchedule& schedule() const { return schedule_; }

private:
    DiffusionSchedule schedule_;
    std::vector<MixtureComponent> components_;
    Shape shape_;
};

}  // namespace dsi
