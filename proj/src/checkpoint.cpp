#include <milwsi/checkpoint.hpp>

#include <milwsi/byte_io.hpp>
#include <milwsi/error.hpp>

namespace milwsi {

namespace {

constexpr char kMagic[4] = {'M', 'I', 'L', 'M'};

} // namespace

std::vector<std::uint8_t> encode_model(const MilModel& model)
{
    if (!model.all_finite())
        throw ValidationError("checkpoint: model has non-finite parameters");
    detail::ByteWriter w;
    w.bytes(kMagic, 4);
    w.put<std::uint32_t>(kCheckpointVersion);
    w.put<std::uint64_t>(model.seed);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.dims.input));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.dims.hidden));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.dims.attention));
    MilModel::zip(
        [&](const TensorInfo& info, const auto& t) {
            if (!info.persisted)
                return;
            w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rows()));
            w.put<std::uint32_t>(static_cast<std::uint32_t>(t.cols()));
            for (Eigen::Index r = 0; r < t.rows(); ++r)
                for (Eigen::Index c = 0; c < t.cols(); ++c)
                    w.put<double>(t(r, c));
        },
        model);
    return std::move(w.buffer());
}

MilModel decode_model(const std::vector<std::uint8_t>& bytes)
{
    detail::ByteReader r(bytes, "MILM");
    if (r.text(4) != std::string_view(kMagic, 4))
        throw FormatError("MILM: bad magic");
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw FormatError("MILM: unsupported version " + std::to_string(version));
    const auto seed = r.get<std::uint64_t>();
    MilDims dims;
    dims.input = r.get<std::uint32_t>();
    dims.hidden = r.get<std::uint32_t>();
    dims.attention = r.get<std::uint32_t>();
    if (dims.input == 0 || dims.hidden == 0 || dims.attention == 0)
        throw FormatError("MILM: zero model dimension");

    auto model = MilModel::zeros(dims);
    model.seed = seed;
    MilModel::zip(
        [&](const TensorInfo& info, auto& t) {
            if (!info.persisted)
                return;
            const auto rows = r.get<std::uint32_t>();
            const auto cols = r.get<std::uint32_t>();
            if (rows != t.rows() || cols != t.cols())
                throw FormatError("MILM: tensor '" + std::string(info.name) + "' has shape " + std::to_string(rows) +
                                  "x" + std::to_string(cols) + ", expected " + std::to_string(t.rows()) + "x" +
                                  std::to_string(t.cols()));
            if (r.remaining() / sizeof(double) < static_cast<std::size_t>(rows) * cols)
                throw FormatError("MILM: truncated file");
            for (Eigen::Index i = 0; i < t.rows(); ++i)
                for (Eigen::Index j = 0; j < t.cols(); ++j)
                    t(i, j) = r.get<double>();
        },
        model);
    if (r.remaining() != 0)
        throw FormatError("MILM: " + std::to_string(r.remaining()) + " trailing bytes");
    if (!model.all_finite())
        throw FormatError("MILM: non-finite parameter");
    return model;
}

void write_model(const MilModel& model, const std::filesystem::path& path)
{
    detail::write_file(path, encode_model(model));
}

MilModel read_model(const std::filesystem::path& path)
{
    try {
        return decode_model(detail::read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace milwsi
