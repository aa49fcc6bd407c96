#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rectseg {

// Binary PGM (P5) / PPM (P6) readers and writers. 16-bit samples are
// big-endian per the PNM convention.

struct Pgm8 {
    int w = 0, h = 0;
    std::vector<std::uint8_t> pixels; // row-major
};

struct Pgm16 {
    int w = 0, h = 0;
    std::vector<std::uint16_t> pixels;
};

struct Ppm8 {
    int w = 0, h = 0;
    std::vector<std::uint8_t> pixels; // row-major RGB triples
};

void write_pgm8(const std::string& path, const Pgm8& img);
void write_pgm16(const std::string& path, const Pgm16& img);
void write_ppm8(const std::string& path, const Ppm8& img);

Pgm8 read_pgm8(const std::string& path);
Pgm16 read_pgm16(const std::string& path);
Ppm8 read_ppm8(const std::string& path);

} // namespace rectseg
