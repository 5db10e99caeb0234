#pragma once

// Umbrella include for the whole library.

#include "paperbrew/analytics.hpp"
#include "paperbrew/cli.hpp"
#include "paperbrew/config.hpp"
#include "paperbrew/consolidate.hpp"
#include "paperbrew/datamodel.hpp"
#include "paperbrew/dates.hpp"
#include "paperbrew/ingest.hpp"
#include "paperbrew/ingest_http.hpp"
#include "paperbrew/provider.hpp"
#include "paperbrew/provider_http.hpp"
#include "paperbrew/report.hpp"
#include "paperbrew/store.hpp"
#include "paperbrew/summarize.hpp"
#include "paperbrew/util.hpp"
