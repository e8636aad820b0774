#include "lgfn/gradcheck.hpp"

#include <cmath>

namespace lgfn {

namespace {

double evaluate_constant(const ScalarFn& f, const std::vector<Tensor<double>>& point) {
    std::vector<Var<double>> args;
    args.reserve(point.size());
    for (const auto& t : point) args.emplace_back(t);
    Var<double> y = f(args);
    if (y.numel() != 1) throw ShapeError("gradcheck: function must return a scalar, got " + shape_str(y.shape()));
    const double v = y.value()[0];
    if (!std::isfinite(v)) throw EvaluationError("gradcheck: function is not finite at the probe point");
    return v;
}

} // namespace

GradcheckResult gradcheck_detailed(const ScalarFn& f, const std::vector<Tensor<double>>& point, double eps) {
    if (!(eps > 0)) throw InvalidSpecError("gradcheck: eps must be positive");

    GradTape<double> tape;
    std::vector<Var<double>> params;
    params.reserve(point.size());
    for (const auto& t : point) params.push_back(tape.parameter(t));
    Var<double> y = f(params);
    if (y.numel() != 1) throw ShapeError("gradcheck: function must return a scalar, got " + shape_str(y.shape()));
    if (!std::isfinite(y.value()[0])) throw EvaluationError("gradcheck: function is not finite at the point");
    if (y.requires_grad()) tape.backward(y);

    GradcheckResult result;
    std::vector<Tensor<double>> probe = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        const Tensor<double> analytic = params[i].grad();
        for (Index j = 0; j < point[i].numel(); ++j) {
            const double x0 = point[i][j];
            probe[i][j] = x0 + eps;
            const double fp = evaluate_constant(f, probe);
            probe[i][j] = x0 - eps;
            const double fm = evaluate_constant(f, probe);
            probe[i][j] = x0;
            const double numeric = (fp - fm) / (2 * eps);
            const double a = analytic[j];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            if (rel >= result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_input = i;
                result.worst_index = j;
                result.analytic = a;
                result.numeric = numeric;
            }
        }
    }
    return result;
}

} // namespace lgfn
