#pragma once

#include <stdexcept>
#include <string>

namespace eov {

// contract violations are exceptions; validation outcomes are values.

struct out_of_order_block : std::runtime_error {
   explicit out_of_order_block(const std::string& what) : std::runtime_error(what) {}
};

struct non_contiguous_block : std::runtime_error {
   explicit non_contiguous_block(const std::string& what) : std::runtime_error(what) {}
};

struct unknown_tx : std::runtime_error {
   explicit unknown_tx(const std::string& what) : std::runtime_error(what) {}
};

struct empty_block : std::runtime_error {
   explicit empty_block(const std::string& what) : std::runtime_error(what) {}
};

struct empty_leaves : std::runtime_error {
   explicit empty_leaves(const std::string& what) : std::runtime_error(what) {}
};

struct unknown_policy : std::runtime_error {
   explicit unknown_policy(const std::string& what) : std::runtime_error(what) {}
};

struct future_block : std::runtime_error {
   explicit future_block(const std::string& what) : std::runtime_error(what) {}
};

struct filter_not_covered : std::runtime_error {
   explicit filter_not_covered(const std::string& what) : std::runtime_error(what) {}
};

struct pipeline_shutdown : std::runtime_error {
   explicit pipeline_shutdown(const std::string& what) : std::runtime_error(what) {}
};

struct config_invalid : std::runtime_error {
   explicit config_invalid(const std::string& what) : std::runtime_error(what) {}
};

} // namespace eov
