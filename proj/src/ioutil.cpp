#include "cliniq/ioutil.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cliniq/error.hpp"

namespace cliniq {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(errc::io_error, "cannot open \"" + path + "\" for reading");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw Error(errc::io_error, "read failed for \"" + path + "\"");
  }
  return std::move(buf).str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(errc::io_error, "cannot open \"" + tmp + "\" for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      throw Error(errc::io_error, "write failed for \"" + tmp + "\"");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error(errc::io_error, "rename failed for \"" + path + "\"");
  }
}

}  // namespace cliniq
