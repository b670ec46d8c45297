#include <gtest/gtest.h>

#include "rlguard/learn.hpp"

namespace {

// Any certified rollout that turned out unacceptable anywhere in the run fails the binary.
class SoundnessGuard : public ::testing::Environment {
 public:
  void TearDown() override { EXPECT_EQ(rlguard::soundness_violations(), 0u); }
};

}  // namespace

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  ::testing::AddGlobalTestEnvironment(new SoundnessGuard);
  return RUN_ALL_TESTS();
}
