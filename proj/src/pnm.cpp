#include "rectseg/pnm.hpp"

#include <fstream>
#include <stdexcept>

namespace rectseg {

namespace {

void write_header(std::ofstream& out, const char* magic, int w, int h, int maxval) {
    out << magic << "\n" << w << " " << h << "\n" << maxval << "\n";
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

int read_header_value(std::istream& in) {
    // skips whitespace and '#' comments
    while (true) {
        int ch = in.peek();
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    int v = 0;
    if (!(in >> v)) throw std::runtime_error("malformed pnm header");
    return v;
}

void read_magic(std::istream& in, const char* expect, const std::string& path) {
    std::string magic;
    in >> magic;
    if (magic != expect)
        throw std::runtime_error(path + ": expected " + expect + " magic, got '" + magic + "'");
}

} // namespace

void write_pgm8(const std::string& path, const Pgm8& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_header(out, "P5", img.w, img.h, 255);
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
}

void write_pgm16(const std::string& path, const Pgm16& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_header(out, "P5", img.w, img.h, 65535);
    std::vector<std::uint8_t> raw(img.pixels.size() * 2);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        raw[2 * i] = static_cast<std::uint8_t>(img.pixels[i] >> 8);
        raw[2 * i + 1] = static_cast<std::uint8_t>(img.pixels[i] & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

void write_ppm8(const std::string& path, const Ppm8& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_header(out, "P6", img.w, img.h, 255);
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
}

Pgm8 read_pgm8(const std::string& path) {
    auto in = open_binary(path);
    read_magic(in, "P5", path);
    Pgm8 img;
    img.w = read_header_value(in);
    img.h = read_header_value(in);
    int maxval = read_header_value(in);
    if (maxval != 255) throw std::runtime_error(path + ": expected 8-bit pgm");
    in.get(); // single whitespace after maxval
    img.pixels.resize(static_cast<std::size_t>(img.w) * img.h);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!in) throw std::runtime_error(path + ": truncated pixel data");
    return img;
}

Pgm16 read_pgm16(const std::string& path) {
    auto in = open_binary(path);
    read_magic(in, "P5", path);
    Pgm16 img;
    img.w = read_header_value(in);
    img.h = read_header_value(in);
    int maxval = read_header_value(in);
    if (maxval != 65535) throw std::runtime_error(path + ": expected 16-bit pgm");
    in.get();
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(img.w) * img.h * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw std::runtime_error(path + ": truncated pixel data");
    img.pixels.resize(raw.size() / 2);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    return img;
}

Ppm8 read_ppm8(const std::string& path) {
    auto in = open_binary(path);
    read_magic(in, "P6", path);
    Ppm8 img;
    img.w = read_header_value(in);
    img.h = read_header_value(in);
    int maxval = read_header_value(in);
    if (maxval != 255) throw std::runtime_error(path + ": expected 8-bit ppm");
    in.get();
    img.pixels.resize(static_cast<std::size_t>(img.w) * img.h * 3);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!in) throw std::runtime_error(path + ": truncated pixel data");
    return img;
}

} // namespace rectseg
