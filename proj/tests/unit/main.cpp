#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>

#include <spdlog/spdlog.h>

int main(int argc, char** argv) {
    const char* level = std::getenv("GENBAN_LOG");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::err);
    doctest::Context ctx(argc, argv);
    return ctx.run();
}
