#ifndef SLAM2D_TEXTIO_HPP
#define SLAM2D_TEXTIO_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace slam2d {

/// Data-format violation, message carries a line number where applicable.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Fixed-point decimal with 9 fractional digits, the numeric format of every
/// text artifact this project writes.
std::string format_fixed9(double value);

double parse_double(const std::string& token, int line_number);
long long parse_int(const std::string& token, int line_number);

std::vector<std::string> split_whitespace(const std::string& line);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
void write_binary_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_binary_file(const std::string& path);

}  // namespace slam2d

#endif
