#pragma once

#include "paramint/fixtures.hpp"
