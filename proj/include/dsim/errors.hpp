#ifndef DSIM_ERRORS_HPP
#define DSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dsim {

// Base class for all simulator errors so callers can catch the family at once.
class SimError : public std::runtime_error {
public:
    explicit SimError(const std::string& msg) : std::runtime_error(msg) {}
};

// Pitch within the guard band of +/-90 deg; the Euler-rate map is not invertible.
class SingularAttitude : public SimError {
public:
    explicit SingularAttitude(double theta)
        : SimError("attitude singular: |theta| = " + std::to_string(theta) +
                   " rad is within the guard band of pi/2") {}
};

// A state component left the sane envelope during integration.
class Diverged : public SimError {
public:
    explicit Diverged(double t, double magnitude)
        : SimError("simulation diverged at t = " + std::to_string(t) +
                   " s (state magnitude " + std::to_string(magnitude) + ")"),
          time(t) {}
    double time = 0.0;
};

class NonPositiveDt : public SimError {
public:
    explicit NonPositiveDt(double dt)
        : SimError("dt must be positive, got " + std::to_string(dt)) {}
};

// Linearization requested about a point that is not an equilibrium.
class NotEquilibrium : public SimError {
public:
    explicit NotEquilibrium(double residual)
        : SimError("not an equilibrium: ||state_derivative|| = " + std::to_string(residual)) {}
};

// Step-response never stayed inside the settling band.
class NotSettled : public SimError {
public:
    NotSettled() : SimError("signal never settled inside the 2% band") {}
};

class DomainError : public SimError {
public:
    explicit DomainError(const std::string& msg) : SimError(msg) {}
};

class DisjointBoxes : public SimError {
public:
    DisjointBoxes() : SimError("bounding boxes do not intersect; IoU loss undefined") {}
};

class EmptyAnchorSet : public SimError {
public:
    EmptyAnchorSet() : SimError("classification anchor set is empty or has no positives") {}
};

class NoPositiveAnchors : public SimError {
public:
    NoPositiveAnchors() : SimError("regression anchor set has no positive anchors") {}
};

class BehindCamera : public SimError {
public:
    explicit BehindCamera(double depth)
        : SimError("target behind or too close to camera (z = " + std::to_string(depth) + " m)") {}
};

class DegenerateDisparity : public SimError {
public:
    explicit DegenerateDisparity(double disparity)
        : SimError("disparity " + std::to_string(disparity) + " px is at or below the floor") {}
};

// Pursuer is inside the LOS-rate singularity radius; geometrically the target is reached.
class TargetReached : public SimError {
public:
    explicit TargetReached(double range)
        : SimError("relative range " + std::to_string(range) + " m below guidance minimum") {}
};

class TargetNeverAcquired : public SimError {
public:
    explicit TargetNeverAcquired(double t)
        : SimError("target invalid in frame for over 1 s (at t = " + std::to_string(t) + " s)") {}
};

class ObjectiveFailure : public SimError {
public:
    explicit ObjectiveFailure(const std::string& msg) : SimError(msg) {}
};

class ConfigError : public SimError {
public:
    explicit ConfigError(const std::string& msg) : SimError(msg) {}
};

}  // namespace dsim

#endif  // DSIM_ERRORS_HPP
