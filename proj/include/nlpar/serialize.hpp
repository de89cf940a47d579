#pragma once

#include <cmath>
#include <set>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "kernel.hpp"

namespace nlpar {

namespace detail {

inline void require_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(where + "." + it.key(), "unknown key");
}

inline double number_at(const json& j, const std::string& key, const std::string& where, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(where + "." + key, "expected a number");
    return j[key].get<double>();
}

inline double number_at(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + "." + key, "missing required number");
    return number_at(j, key, where, 0.0);
}

template <std::size_t Dim>
double radius2(const std::array<double, Dim>& y) {
    double s = 0.0;
    for (std::size_t d = 0; d < Dim; ++d) s += y[d] * y[d];
    return s;
}

}  // namespace detail

/// Translation-invariant reference coefficient 1 + base / (1 + |y|^2): smooth, even, and with
/// |y| |D a| bounded, so the resulting kernel has the gradient bound of the L1 class.
template <std::size_t Dim>
double reference_coefficient(const Point<Dim>& y, double base) {
    return 1.0 + base / (1.0 + detail::radius2(y));
}

/// Builds a kernel from a descriptor {type, sigma, lambda, scale, ...}.
/// Types: constant{value}, sin_x{amplitude}, reference{base}, cordes{eta, base}, inv_sin_y{amplitude}.
template <std::size_t Dim>
KernelSpec<Dim> kernel_from_json(const json& j, const std::string& where = "kernel", double sigma_default = NAN,
                                 double lambda_default = 1.0) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw ConfigError(where + ".type", "kernel type string required");
    const std::string type = j["type"];
    const double sigma = std::isnan(sigma_default) ? detail::number_at(j, "sigma", where)
                                                   : detail::number_at(j, "sigma", where, sigma_default);
    const double lambda = detail::number_at(j, "lambda", where, lambda_default);
    const double scale = detail::number_at(j, "scale", where, 1.0);
    KernelSpec<Dim> k;
    json desc = {{"type", type}};
    try {
        if (type == "constant") {
            detail::require_keys(j, where, {"type", "sigma", "lambda", "scale", "value"});
            k = make_fractional_kernel<Dim>(sigma, detail::number_at(j, "value", where, 1.0), lambda);
            desc["value"] = *k.constant;
        } else if (type == "sin_x") {
            detail::require_keys(j, where, {"type", "sigma", "lambda", "scale", "amplitude"});
            const double a = detail::number_at(j, "amplitude", where);
            k = make_variable_kernel<Dim>(
                sigma, lambda, [a](const Point<Dim>& x, double, const Point<Dim>&) { return 1.0 + a * std::sin(x[0]); },
                false, true);
            desc["amplitude"] = a;
        } else if (type == "reference") {
            detail::require_keys(j, where, {"type", "sigma", "lambda", "scale", "base"});
            const double b = detail::number_at(j, "base", where, 0.25);
            k = make_variable_kernel<Dim>(
                sigma, lambda, [b](const Point<Dim>&, double, const Point<Dim>& y) { return reference_coefficient<Dim>(y, b); },
                true, true);
            desc["base"] = b;
        } else if (type == "cordes") {
            detail::require_keys(j, where, {"type", "sigma", "lambda", "scale", "base", "eta"});
            const double b = detail::number_at(j, "base", where, 0.25);
            const double eta = detail::number_at(j, "eta", where);
            k = make_variable_kernel<Dim>(
                sigma, lambda,
                [b, eta](const Point<Dim>& x, double, const Point<Dim>& y) {
                    return reference_coefficient<Dim>(y, b) * (1.0 + eta * std::sin(x[0]));
                },
                eta == 0.0, true);
            desc["base"] = b;
            desc["eta"] = eta;
        } else if (type == "inv_sin_y") {
            detail::require_keys(j, where, {"type", "sigma", "lambda", "scale", "amplitude"});
            const double a = detail::number_at(j, "amplitude", where);
            k = make_variable_kernel<Dim>(
                sigma, lambda,
                [a](const Point<Dim>&, double, const Point<Dim>& y) {
                    return 1.0 + a * std::sin(1.0 / std::sqrt(detail::radius2(y)));
                },
                true, true);
            desc["amplitude"] = a;
        } else {
            throw ConfigError(where + ".type", "unknown kernel type '" + type + "'");
        }
    } catch (const ParameterError& e) {
        throw ConfigError(where, e.what());
    }
    if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError(where + ".scale", "scale must lie in (0, 1]");
    k.scale = scale;
    k.descriptor = desc;
    return k;
}

template <std::size_t Dim>
json kernel_to_json(const KernelSpec<Dim>& k) {
    json j = k.descriptor;
    j["sigma"] = k.sigma;
    j["lambda"] = k.lambda;
    if (k.scale != 1.0) j["scale"] = k.scale;
    return j;
}

/// {kind: linear|pucci_plus|pucci_minus|inf_sup, sigma, lambda, kernel | family}
template <std::size_t Dim>
OperatorSpec<Dim> operator_from_json(const json& j, const std::string& where = "operator") {
    detail::require_keys(j, where, {"kind", "sigma", "lambda", "kernel", "family"});
    if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError(where + ".kind", "operator kind string required");
    const std::string kind = j["kind"];
    const double sigma = detail::number_at(j, "sigma", where);
    const double lambda = detail::number_at(j, "lambda", where, 1.0);
    try {
        if (kind == "pucci_plus") return OperatorSpec<Dim>::pucci_plus(sigma, lambda);
        if (kind == "pucci_minus") return OperatorSpec<Dim>::pucci_minus(sigma, lambda);
        if (kind == "linear") {
            if (!j.contains("kernel")) throw ConfigError(where + ".kernel", "linear operator needs a kernel");
            return OperatorSpec<Dim>::linear(kernel_from_json<Dim>(j["kernel"], where + ".kernel", sigma, lambda));
        }
        if (kind == "inf_sup") {
            if (!j.contains("family") || !j["family"].is_array())
                throw ConfigError(where + ".family", "inf_sup operator needs a family array");
            std::vector<std::vector<KernelSpec<Dim>>> fam;
            for (std::size_t a = 0; a < j["family"].size(); ++a) {
                const auto& row = j["family"][a];
                const std::string rw = where + ".family[" + std::to_string(a) + "]";
                if (!row.is_array()) throw ConfigError(rw, "expected an array of kernels");
                fam.emplace_back();
                for (std::size_t b = 0; b < row.size(); ++b)
                    fam.back().push_back(kernel_from_json<Dim>(row[b], rw + "[" + std::to_string(b) + "]", sigma, lambda));
            }
            return OperatorSpec<Dim>::inf_sup(std::move(fam));
        }
    } catch (const ParameterError& e) {
        throw ConfigError(where, e.what());
    }
    throw ConfigError(where + ".kind", "unknown operator kind '" + kind + "'");
}

template <std::size_t Dim>
json operator_to_json(const OperatorSpec<Dim>& op) {
    json j = {{"kind", to_string(op.kind)}, {"sigma", op.sigma}, {"lambda", op.lambda}};
    if (op.kind == OperatorKind::Linear) j["kernel"] = kernel_to_json(op.family[0][0]);
    if (op.kind == OperatorKind::InfSup) {
        json fam = json::array();
        for (const auto& row : op.family) {
            json r = json::array();
            for (const auto& k : row) r.push_back(kernel_to_json(k));
            fam.push_back(r);
        }
        j["family"] = fam;
    }
    return j;
}

}  // namespace nlpar
