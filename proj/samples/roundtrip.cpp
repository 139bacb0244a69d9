// Compresses a synthetic grid at three error bounds and prints what each archive holds.
#include <iostream>

#include "graphcomp/graphcomp.hpp"

int main() {
    using namespace graphcomp;
    const auto grid = synth_field<float>(7, 40, 48, 48, 1.0);

    CompressConfig cfg = CompressConfig::compact();
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        cfg.eps = eps;
        const auto res = compress(grid, cfg);
        const auto back = decompress_as<float>(res.archive);
        const auto report = verify(grid, back, eps, res.archive.size());
        std::cout << "eps " << eps << "  ratio " << res.metrics.ratio << "  psnr " << report.metrics.psnr
                  << " dB  max rel " << report.metrics.max_rel_err << "  " << (report.pass ? "ok" : "FAILED")
                  << "\n  segm " << res.sizes.segm << "  model " << res.sizes.model << "  latent " << res.sizes.latent
                  << "  resid " << res.sizes.resid << " bytes\n";
        if (!report.pass) return 1;
    }
}
