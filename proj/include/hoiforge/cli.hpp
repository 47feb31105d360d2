// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace hoiforge {
int cli_main(int argc, char** argv);
}
