#include "parsefuse/gradcheck.hpp"

#include <cmath>

namespace parsefuse {

std::vector<std::vector<double>> finite_difference_gradients(
    const std::function<double()>& loss_fn, const std::vector<Parameter*>& params, double eps) {
    std::vector<std::vector<double>> grads;
    grads.reserve(params.size());
    for (Parameter* p : params) {
        auto& theta = p->tensor.data();
        std::vector<double> g(theta.size(), 0.0);
        for (size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + eps;
            const double up = loss_fn();
            theta[i] = saved - eps;
            const double down = loss_fn();
            theta[i] = saved;
            g[i] = (up - down) / (2.0 * eps);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

double max_relative_gradient_error(const std::vector<Parameter*>& params,
                                   const std::vector<std::vector<double>>& numeric) {
    double worst = 0.0;
    for (size_t k = 0; k < params.size(); ++k) {
        const auto& a = params[k]->tensor.grad();
        const auto& n = numeric[k];
        for (size_t i = 0; i < a.size(); ++i) {
            const double denom = std::max({1.0, std::fabs(a[i]), std::fabs(n[i])});
            worst = std::max(worst, std::fabs(a[i] - n[i]) / denom);
        }
    }
    return worst;
}

}  // namespace parsefuse
