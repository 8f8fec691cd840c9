#include <milwsi/feature_bag.hpp>

#include <milwsi/byte_io.hpp>
#include <milwsi/error.hpp>

#include <cmath>
#include <fstream>
#include <iterator>

namespace milwsi {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

} // namespace detail

namespace {

constexpr char kMagic[4] = {'F', 'B', 'A', 'G'};

} // namespace

void FeatureBag::validate() const
{
    if (features.rows() == 0 || features.cols() == 0)
        throw ValidationError("bag '" + slide_id + "': N and D must be at least 1");
    if (static_cast<Eigen::Index>(coords.size()) != features.rows())
        throw ValidationError("bag '" + slide_id + "': coordinate count does not match feature rows");
    if (!features.allFinite())
        throw ValidationError("bag '" + slide_id + "': non-finite feature value");
}

std::vector<std::uint8_t> encode_bag(const FeatureBag& bag)
{
    bag.validate();
    const auto n = static_cast<std::uint32_t>(bag.size());
    const auto d = static_cast<std::uint32_t>(bag.dim());
    // Values finite in double can still overflow float32.
    const Eigen::MatrixXf narrowed = bag.features.cast<float>();
    if (!narrowed.allFinite())
        throw ValidationError("bag '" + bag.slide_id + "': feature value overflows float32");

    detail::ByteWriter w;
    w.buffer().reserve(fbag_file_size(bag.slide_id.size(), n, d));
    w.bytes(kMagic, 4);
    w.put<std::uint32_t>(kFbagVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(bag.slide_id.size()));
    w.text(bag.slide_id);
    w.put<std::uint32_t>(n);
    w.put<std::uint32_t>(d);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(bag.patch_size));
    for (const auto& c : bag.coords) {
        w.put<std::int32_t>(c.x);
        w.put<std::int32_t>(c.y);
    }
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < d; ++j)
            w.put<float>(narrowed(i, j));
    return std::move(w.buffer());
}

FeatureBag decode_bag(const std::vector<std::uint8_t>& bytes)
{
    detail::ByteReader r(bytes, "FBAG");
    const auto magic = r.text(4);
    if (magic != std::string_view(kMagic, 4))
        throw FormatError("FBAG: bad magic");
    const auto version = r.get<std::uint32_t>();
    if (version != kFbagVersion)
        throw FormatError("FBAG: unsupported version " + std::to_string(version));
    const auto id_len = r.get<std::uint32_t>();
    if (id_len > r.remaining())
        throw FormatError("FBAG: truncated file");

    FeatureBag bag;
    bag.slide_id = r.text(id_len);
    const auto n = r.get<std::uint32_t>();
    const auto d = r.get<std::uint32_t>();
    bag.patch_size = static_cast<std::int32_t>(r.get<std::uint32_t>());
    if (n == 0 || d == 0)
        throw FormatError("FBAG: N and D must be at least 1");
    const auto expected = fbag_file_size(id_len, n, d);
    if (bytes.size() < expected)
        throw FormatError("FBAG: truncated file (" + std::to_string(bytes.size()) + " bytes, header implies " +
                          std::to_string(expected) + ")");
    if (bytes.size() > expected)
        throw FormatError("FBAG: oversized file (" + std::to_string(bytes.size()) + " bytes, header implies " +
                          std::to_string(expected) + ")");

    bag.coords.resize(n);
    for (auto& c : bag.coords) {
        c.x = r.get<std::int32_t>();
        c.y = r.get<std::int32_t>();
        c.patch_size = bag.patch_size;
    }
    bag.features.resize(n, d);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < d; ++j)
            bag.features(i, j) = static_cast<double>(r.get<float>());
    if (!bag.features.allFinite())
        throw FormatError("FBAG: non-finite feature value");
    return bag;
}

void write_bag(const FeatureBag& bag, const std::filesystem::path& path)
{
    detail::write_file(path, encode_bag(bag));
}

FeatureBag read_bag(const std::filesystem::path& path)
{
    try {
        return decode_bag(detail::read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace milwsi
