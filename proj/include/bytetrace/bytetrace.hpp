#pragma once

#include "bytetrace/error.hpp"
#include "bytetrace/method_ref.hpp"
#include "bytetrace/smali.hpp"
#include "bytetrace/sources.hpp"
#include "bytetrace/summary.hpp"
#include "bytetrace/prompt.hpp"
#include "bytetrace/response.hpp"
#include "bytetrace/backend.hpp"
#include "bytetrace/http_backend.hpp"
#include "bytetrace/taint_backend.hpp"
#include "bytetrace/d2cfg.hpp"
#include "bytetrace/report.hpp"
#include "bytetrace/evalkit.hpp"
#include "bytetrace/cli.hpp"
