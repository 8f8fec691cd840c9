#include <milwsi/cli.hpp>

int main(int argc, char** argv)
{
    return milwsi::run_cli(argc, argv);
}
