#include <cstdio>

#include "wavelab/lab.hpp"

/// One line per acceptance criterion; non-zero exit when any fails.
int main() {
    int failed = 0;
    wavelab::run_acceptance(false, [&](const wavelab::CriterionResult& c) {
        std::printf("criterion %2d %-4s %-32s %7.1fs  %s\n", c.id, c.pass ? "PASS" : "FAIL", c.title.c_str(), c.seconds,
                    c.detail.c_str());
        std::fflush(stdout);
        failed += c.pass ? 0 : 1;
    });
    std::printf("%d of 13 criteria passed\n", 13 - failed);
    return failed ? 1 : 0;
}
