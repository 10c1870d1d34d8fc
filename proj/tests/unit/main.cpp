#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "toftomo/log.hpp"

int main(int argc, char** argv) {
    toftomo::set_warning_sink({});
    doctest::Context ctx(argc, argv);
    return ctx.run();
}
