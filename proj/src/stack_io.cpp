#include "sbn/stack_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace sbn {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'S', 'B', 'N', 'T'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 2 + 3 * 4;

static_assert(std::endian::native == std::endian::little,
              "SBNT I/O assumes a little-endian host");

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

[[noreturn]] void fail(const fs::path& path, const std::string& what, std::size_t offset) {
    throw FormatError(path.string() + ": " + what + " at byte " + std::to_string(offset));
}

}  // namespace

FrameStack load_stack(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(path.string() + ": cannot open for reading");

    unsigned char header[kHeaderSize];
    in.read(reinterpret_cast<char*>(header), 4);
    if (in.gcount() != 4 || std::memcmp(header, kMagic, 4) != 0)
        fail(path, "bad magic", 0);
    in.read(reinterpret_cast<char*>(header + 4), kHeaderSize - 4);
    if (static_cast<std::size_t>(in.gcount()) != kHeaderSize - 4)
        fail(path, "truncated header",
             4 + static_cast<std::size_t>(std::max<std::streamsize>(in.gcount(), 0)));
    const std::uint16_t version =
        static_cast<std::uint16_t>(header[4] | (static_cast<std::uint16_t>(header[5]) << 8));
    if (version != kVersion)
        fail(path, "unsupported version " + std::to_string(version), 4);

    const std::uint32_t na = read_u32(header + 6);
    const std::uint32_t nr = read_u32(header + 10);
    const std::uint32_t f = read_u32(header + 14);
    if (na < 1 || nr < 1 || f < 1)
        fail(path, "zero dimension in header", 6);

    const std::size_t count = static_cast<std::size_t>(na) * nr * f;
    std::vector<float> data(count);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    const std::size_t got = static_cast<std::size_t>(std::max<std::streamsize>(in.gcount(), 0));
    if (got != count * sizeof(float))
        fail(path, "truncated payload", kHeaderSize + got);

    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(data[i]))
            fail(path, "non-finite value", kHeaderSize + i * sizeof(float));
    }
    return FrameStack(na, nr, f, std::move(data));
}

void save_stack(const FrameStack& stack, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error(path.string() + ": cannot open for writing");
    out.write(kMagic, 4);
    unsigned char ver[2] = {static_cast<unsigned char>(kVersion & 0xff),
                            static_cast<unsigned char>(kVersion >> 8)};
    out.write(reinterpret_cast<const char*>(ver), 2);
    write_u32(out, static_cast<std::uint32_t>(stack.height()));
    write_u32(out, static_cast<std::uint32_t>(stack.width()));
    write_u32(out, static_cast<std::uint32_t>(stack.frames()));
    out.write(reinterpret_cast<const char*>(stack.data().data()),
              static_cast<std::streamsize>(stack.data().size() * sizeof(float)));
    if (!out)
        throw std::runtime_error(path.string() + ": write failed");
}

namespace {

// Skips PGM whitespace and '#' comments, then parses a nonnegative integer.
int pgm_int(std::istream& in, const fs::path& path) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c))
        throw FormatError(path.string() + ": malformed PGM header");
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > 1'000'000'000)
            throw FormatError(path.string() + ": PGM header value out of range");
        c = in.get();
    }
    return static_cast<int>(v);
}

struct PgmImage {
    std::size_t height = 0, width = 0;
    std::vector<unsigned char> pixels;
};

PgmImage load_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(path.string() + ": cannot open for reading");
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5')
        throw FormatError(path.string() + ": not a binary PGM (P5) file");
    const int width = pgm_int(in, path);
    const int height = pgm_int(in, path);
    const int maxval = pgm_int(in, path);
    if (maxval != 255)
        throw FormatError(path.string() + ": unsupported PGM maxval " + std::to_string(maxval) +
                          " (only 255)");
    // single whitespace byte separates header from raster
    PgmImage img;
    img.width = static_cast<std::size_t>(width);
    img.height = static_cast<std::size_t>(height);
    img.pixels.resize(img.width * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.pixels.size())
        throw FormatError(path.string() + ": truncated PGM raster");
    return img;
}

}  // namespace

FrameStack import_frames(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            files.push_back(entry.path());
    }
    if (files.empty())
        throw FormatError(dir.string() + ": no .pgm files found");
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

    PgmImage first = load_pgm(files[0]);
    FrameStack stack(first.height, first.width, files.size());
    for (std::size_t f = 0; f < files.size(); ++f) {
        PgmImage img = f == 0 ? std::move(first) : load_pgm(files[f]);
        if (img.height != stack.height() || img.width != stack.width())
            throw FormatError(files[f].string() + ": frame is " + std::to_string(img.width) + "x" +
                              std::to_string(img.height) + " but first frame is " +
                              std::to_string(stack.width()) + "x" + std::to_string(stack.height()));
        float* dst = stack.frame_data(f);
        for (std::size_t i = 0; i < img.pixels.size(); ++i)
            dst[i] = static_cast<float>(img.pixels[i]) / 255.0f;
    }
    return stack;
}

void export_frames(const FrameStack& stack, const fs::path& dir, bool normalize) {
    fs::create_directories(dir);
    float lo = stack.data()[0], hi = stack.data()[0];
    if (normalize) {
        for (float v : stack.data()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const float range = hi - lo;
    std::vector<unsigned char> buf(stack.pixels_per_frame());
    for (std::size_t f = 0; f < stack.frames(); ++f) {
        const float* src = stack.frame_data(f);
        for (std::size_t i = 0; i < buf.size(); ++i) {
            float v;
            if (normalize)
                v = range > 0.0f ? (src[i] - lo) / range : 0.0f;
            else
                v = std::clamp(src[i], 0.0f, 1.0f);
            buf[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
        }
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%06zu.pgm", f);
        const fs::path path = dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error(path.string() + ": cannot open for writing");
        out << "P5\n" << stack.width() << " " << stack.height() << "\n255\n";
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!out)
            throw std::runtime_error(path.string() + ": write failed");
    }
}

}  // namespace sbn
