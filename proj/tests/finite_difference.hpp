#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

// Central differences with step 1e-5. An entry passes when it agrees within 1e-4
// relative, or when both sides are below 1e-9 in magnitude.
struct GradientCheck {
    std::size_t checked = 0;
    std::size_t failed = 0;
    double worst = 0;
    std::vector<std::string> messages;

    void run(double* param, const double* analytic, std::size_t n, const std::function<double()>& loss,
             const std::string& what) {
        constexpr double h = 1e-5;
        for (std::size_t i = 0; i < n; ++i) {
            const double saved = param[i];
            param[i] = saved + h;
            const double up = loss();
            param[i] = saved - h;
            const double down = loss();
            param[i] = saved;
            const double numeric = (up - down) / (2 * h);
            const double diff = std::abs(numeric - analytic[i]);
            const double scale = std::max(std::abs(numeric), std::abs(analytic[i]));
            ++checked;
            if (diff <= 1e-4 * scale || scale < 1e-9) continue;
            ++failed;
            worst = std::max(worst, diff / scale);
            if (messages.size() < 10) {
                std::ostringstream msg;
                msg << what << "[" << i << "]: analytic " << analytic[i] << " numeric " << numeric;
                messages.push_back(msg.str());
            }
        }
    }

    std::string summary() const {
        std::ostringstream out;
        out << failed << "/" << checked << " entries off, worst relative " << worst;
        for (const auto& m : messages) out << "\n  " << m;
        return out.str();
    }
};
