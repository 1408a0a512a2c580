#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "contactnet/errors.hpp"
#include "contactnet/experiment.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (const auto& a : args)
        if (a == "--help" || a == "-h") {
            std::cout << contactnet::usage_text();
            return 0;
        }
    try {
        const auto cfg = contactnet::parse_config(args);
        contactnet::run_experiment(cfg);
        return 0;
    } catch (const contactnet::usage_error& e) {
        std::cerr << "usage error: " << e.what() << '\n' << contactnet::usage_text();
        return 2;
    } catch (const contactnet::resource_limit_error& e) {
        std::cerr << "resource limit: " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
