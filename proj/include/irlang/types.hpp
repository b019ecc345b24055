#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace irlang {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

enum class StepStatus { ok, diverged };

struct Box2 {
    double x0 = -3.0, x1 = 3.0;
    double y0 = -3.0, y1 = 3.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    bool contains(const Vec2& z) const {
        return z.x() >= x0 && z.x() <= x1 && z.y() >= y0 && z.y() <= y1;
    }
};

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class GeometryError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace irlang
