// Top-gamma sparsification and error feedback on a toy gradient, mirroring
// the 5-element walkthrough from the docs.

#include <cstdio>

#include "fedgcc/compression.hpp"

int main() {
    using namespace fedgcc;

    const ParamVector g = {3.0, -5.0, 1.0, 0.0, 2.0};

    for (double gamma : {0.2, 0.4, 1.0}) {
        const SparseGradient sg = sparsify_topk(g, gamma);
        std::printf("gamma=%.1f keeps %zu of %u -> %llu wire bytes:", gamma,
                    sg.nnz(), sg.dim,
                    static_cast<unsigned long long>(wire_bytes(sg)));
        for (std::size_t j = 0; j < sg.nnz(); ++j)
            std::printf(" [%u]=%g", sg.indices[j], sg.values[j]);
        std::printf("\n");
    }

    Vec e(g.size(), 0.0);
    const SparseGradient sg = sparsify_topk(g, 0.4);
    update_error_feedback(e, g, sg);
    std::printf("error feedback after one round:");
    for (double x : e) std::printf(" %g", x);
    std::printf("\n");
    return 0;
}
