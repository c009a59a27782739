#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cliniq/error.hpp"
#include "cliniq/fixtures.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the offline demo dataset: tables, note, templates, config"};
  std::string dir = "fixtures";
  app.add_option("-d,--dir", dir, "Target directory")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& path : cliniq::fixtures::write_fixture_dir(dir)) {
      std::cout << path << "\n";
    }
  } catch (const cliniq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
