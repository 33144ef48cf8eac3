#pragma once

#define GEXP_VERSION "0.1.0"
