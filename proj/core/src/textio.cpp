#include "slam2d/textio.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace slam2d {

std::string format_fixed9(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", value);
    return buf;
}

double parse_double(const std::string& token, int line_number) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &pos);
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_number) + ": bad number '" + token + "'");
    }
    if (pos != token.size()) {
        throw DataError("line " + std::to_string(line_number) + ": bad number '" + token + "'");
    }
    return v;
}

long long parse_int(const std::string& token, int line_number) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(token, &pos);
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_number) + ": bad integer '" + token + "'");
    }
    if (pos != token.size()) {
        throw DataError("line " + std::to_string(line_number) + ": bad integer '" + token + "'");
    }
    return v;
}

std::vector<std::string> split_whitespace(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
        tokens.push_back(tok);
    }
    return tokens;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write '" + path + "'");
    }
    out << content;
}

void write_binary_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write '" + path + "'");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace slam2d
