#include "dtrkit/manifest.hpp"

#include "dtrkit/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

namespace dtrkit {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw NumericalError("sha256: digest initialization failed");
  }
  void update(const char* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

void Manifest::record(const std::string& stage, const std::vector<std::filesystem::path>& inputs,
                      const std::string& config_text, const std::vector<std::filesystem::path>& outputs) {
  std::ostringstream os;
  os << "stage=" << stage << " config=" << sha256_hex(config_text).substr(0, 16);
  os << " inputs=";
  for (std::size_t i = 0; i < inputs.size(); ++i)
    os << (i ? "," : "") << inputs[i].filename().string() << ':' << sha256_file(inputs[i]).substr(0, 16);
  os << " outputs=";
  for (std::size_t i = 0; i < outputs.size(); ++i)
    os << (i ? "," : "") << outputs[i].lexically_relative(root_).generic_string() << ':'
       << sha256_file(outputs[i]).substr(0, 16);
  lines_.push_back(os.str());
}

void Manifest::write() const {
  std::ofstream out(root_ / "manifest.txt", std::ios::binary);
  for (const auto& l : lines_) out << l << '\n';
}

}  // namespace dtrkit
