// Staffing levels of the square-root and basic alpha rules, then the infinite-server
// exceedance probability the basic alpha level delivers at each load.

#include <cstdio>

#include "taylorstaff/taylorstaff.hpp"

using namespace taylorstaff;

int main() {
    const auto service = ServiceDistSpec::lognormal(1.0 / 6.0, 1.0 / 6.0);
    const auto target = QosTarget::from_epsilon(0.05);
    std::printf("lambda  sqrt  basic-alpha  P(Q>n)\n");
    for (double lambda : {150.0, 600.0, 2400.0}) {
        const GcirParams p{lambda, 0.1, 0.5, 0.5};
        const int n_sqrt = sqrt_rule(lambda, service.mu(), target).n;
        const int n_alpha = basic_alpha_rule(p, service, target).n;
        const auto run = stationary_delay(ArrivalModelSpec::m5(p), service, n_alpha, true, 50, 48.0, 24.0, 7);
        std::printf("%6.0f  %4d  %11d  %.3f\n", lambda, n_sqrt, n_alpha, run.average());
    }
}
