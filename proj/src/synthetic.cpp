#include <milwsi/synthetic.hpp>

#include <milwsi/error.hpp>
#include <milwsi/rng.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace milwsi {

SyntheticDataset make_synthetic(const SyntheticParams& params)
{
    if (params.bags < 1 || params.instances < 1 || params.dim < 1)
        throw ValidationError("synthetic benchmark sizes must be positive");
    if (!(params.witness_frac > 0.0 && params.witness_frac <= 1.0))
        throw ValidationError("witness fraction must lie in (0, 1]");

    Rng rng(params.seed);
    const int witnesses =
        std::max(1, static_cast<int>(std::lround(params.witness_frac * static_cast<double>(params.instances))));
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(params.instances))));

    SyntheticDataset out;
    out.bags.reserve(static_cast<std::size_t>(params.bags));
    for (int b = 0; b < params.bags; ++b) {
        const int label = b % 2 == 0 ? 1 : 0;
        FeatureBag bag;
        char id[32];
        std::snprintf(id, sizeof id, "syn%04d", b);
        bag.slide_id = id;
        bag.patch_size = 256;
        bag.features.resize(params.instances, params.dim);
        for (int i = 0; i < params.instances; ++i) {
            bag.coords.push_back({(i % side) * 256, (i / side) * 256, 256});
            for (int j = 0; j < params.dim; ++j)
                bag.features(i, j) = rng.normal();
        }
        if (label == 1) {
            std::vector<int> order(static_cast<std::size_t>(params.instances));
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(std::span<int>(order));
            for (int w = 0; w < witnesses; ++w)
                bag.features.row(order[static_cast<std::size_t>(w)]).array() += params.witness_shift;
        }
        out.bags.push_back(std::move(bag));
        out.labels.push_back(label);
    }
    return out;
}

std::filesystem::path write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir / "bags", ec);
    if (ec)
        throw IoError("cannot create '" + (dir / "bags").string() + "': " + ec.message());
    const auto manifest_path = dir / "manifest.csv";
    std::ofstream manifest(manifest_path, std::ios::binary | std::ios::trunc);
    if (!manifest)
        throw IoError("cannot write '" + manifest_path.string() + "'");
    manifest << "slide_id,bag_path,label\n";
    for (std::size_t i = 0; i < data.bags.size(); ++i) {
        const auto rel = std::filesystem::path("bags") / (data.bags[i].slide_id + ".fbag");
        write_bag(data.bags[i], dir / rel);
        manifest << data.bags[i].slide_id << ',' << rel.generic_string() << ','
                 << (data.labels[i] == 1 ? "positive" : "negative") << '\n';
    }
    if (!manifest)
        throw IoError("failed writing '" + manifest_path.string() + "'");
    return manifest_path;
}

} // namespace milwsi
