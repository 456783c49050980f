#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <boost/math/distributions/exponential.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>

#include "taylorstaff/errors.hpp"
#include "taylorstaff/rng.hpp"

namespace taylorstaff {

enum class ServiceFamily { exponential, lognormal, gamma };

inline std::string to_string(ServiceFamily f) {
    switch (f) {
        case ServiceFamily::exponential: return "exp";
        case ServiceFamily::lognormal: return "lognormal";
        case ServiceFamily::gamma: return "gamma";
    }
    return "?";
}

inline ServiceFamily parse_service_family(const std::string& s) {
    if (s == "exp" || s == "exponential") return ServiceFamily::exponential;
    if (s == "lognormal" || s == "lognorm") return ServiceFamily::lognormal;
    if (s == "gamma") return ServiceFamily::gamma;
    throw ValidationError("unknown service family '" + s + "'");
}

struct ServiceDistSpec {
    ServiceFamily family = ServiceFamily::exponential;
    double mean = 1.0;
    double sd = 1.0;

    static ServiceDistSpec exponential(double mu) { return {ServiceFamily::exponential, 1.0 / mu, 1.0 / mu}; }
    static ServiceDistSpec lognormal(double m, double s) { return {ServiceFamily::lognormal, m, s}; }
    static ServiceDistSpec gamma(double m, double s) { return {ServiceFamily::gamma, m, s}; }

    void validate() const {
        require(std::isfinite(mean) && mean > 0.0, "service mean must be > 0");
        if (family != ServiceFamily::exponential) require(std::isfinite(sd) && sd > 0.0, "service sd must be > 0");
    }

    [[nodiscard]] double mu() const { return 1.0 / mean; }

    // Lognormal (location, scale) of log S.
    [[nodiscard]] double log_location() const { return std::log(mean * mean / std::sqrt(mean * mean + sd * sd)); }
    [[nodiscard]] double log_scale() const { return std::sqrt(std::log1p(sd * sd / (mean * mean))); }
    [[nodiscard]] double gamma_shape() const { return mean * mean / (sd * sd); }
    [[nodiscard]] double gamma_rate() const { return mean / (sd * sd); }

    [[nodiscard]] double survival(double t) const {
        if (t <= 0.0) return 1.0;
        using namespace boost::math;
        switch (family) {
            case ServiceFamily::exponential: return std::exp(-t / mean);
            case ServiceFamily::lognormal:
                return cdf(complement(lognormal_distribution<double>(log_location(), log_scale()), t));
            case ServiceFamily::gamma:
                return cdf(complement(gamma_distribution<double>(gamma_shape(), 1.0 / gamma_rate()), t));
        }
        return 0.0;
    }

    // Smallest t with survival(t) <= p.
    [[nodiscard]] double survival_quantile(double p) const {
        using namespace boost::math;
        switch (family) {
            case ServiceFamily::exponential: return -mean * std::log(p);
            case ServiceFamily::lognormal:
                return quantile(complement(lognormal_distribution<double>(log_location(), log_scale()), p));
            case ServiceFamily::gamma:
                return quantile(complement(gamma_distribution<double>(gamma_shape(), 1.0 / gamma_rate()), p));
        }
        return 0.0;
    }
};

// Draws service times; one object per replication substream.
class ServiceSampler {
public:
    ServiceSampler(const ServiceDistSpec& spec, std::uint64_t seed) : spec_(spec), eng_(make_engine(seed)) {
        spec_.validate();
        switch (spec_.family) {
            case ServiceFamily::exponential: exp_ = std::exponential_distribution<double>(1.0 / spec_.mean); break;
            case ServiceFamily::lognormal:
                logn_ = std::lognormal_distribution<double>(spec_.log_location(), spec_.log_scale());
                break;
            case ServiceFamily::gamma:
                gam_ = std::gamma_distribution<double>(spec_.gamma_shape(), 1.0 / spec_.gamma_rate());
                break;
        }
    }

    double operator()() {
        switch (spec_.family) {
            case ServiceFamily::exponential: return exp_(eng_);
            case ServiceFamily::lognormal: return logn_(eng_);
            case ServiceFamily::gamma: return gam_(eng_);
        }
        return 0.0;
    }

private:
    ServiceDistSpec spec_;
    Engine eng_;
    std::exponential_distribution<double> exp_;
    std::lognormal_distribution<double> logn_;
    std::gamma_distribution<double> gam_;
};

}  // namespace taylorstaff
