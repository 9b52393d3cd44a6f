#pragma once

#include "edgeirr/edge_node.hpp"

#include <filesystem>
#include <gtest/gtest.h>
#include <random>

namespace edgeirr::support {

inline std::filesystem::path source_path(const std::string& rel)
{
    return std::filesystem::path{EDGEIRR_SOURCE_DIR} / rel;
}

inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / "edgeirr_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Every test binary ends by checking that no EdgeOnly node leaked a record.
class EgressCheck : public ::testing::Environment
{
public:
    void TearDown() override { EXPECT_EQ(edge::EdgeBoundaryGuard::edge_only_egress_total(), 0u); }
};

inline ::testing::Environment* const kEgressCheck =
    ::testing::AddGlobalTestEnvironment(new EgressCheck);

} // namespace edgeirr::support
