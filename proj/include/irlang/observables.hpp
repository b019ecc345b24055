#pragma once

#include "irlang/types.hpp"

#include <functional>
#include <string>

namespace irlang {

using Observable = std::function<double(const Vec2&)>;

inline Observable make_observable(const std::string& id) {
    if (id == "x+y^2") return [](const Vec2& z) { return z.x() + z.y() * z.y(); };
    if (id == "(x-1)^2+y^2")
        return [](const Vec2& z) { return (z.x() - 1.0) * (z.x() - 1.0) + z.y() * z.y(); };
    if (id == "x") return [](const Vec2& z) { return z.x(); };
    if (id == "y") return [](const Vec2& z) { return z.y(); };
    if (id == "x^2") return [](const Vec2& z) { return z.x() * z.x(); };
    if (id == "y^2") return [](const Vec2& z) { return z.y() * z.y(); };
    throw ConfigError("unknown observable id: " + id);
}

}  // namespace irlang
