#pragma once

#include <string>

#include "oracles.hpp"
#include "qolab/catalog.hpp"

namespace qolab::fixture {

// Two facts over two dimensions; f1.k = f2.k is the only m:n join.
inline const char* kShopSchema = R"({"tables": [
  {"name": "d1", "primary_key": "id", "columns": [{"name": "id", "type": "int64", "key": true},
                                                  {"name": "name", "type": "text"}]},
  {"name": "d2", "primary_key": "id", "columns": [{"name": "id", "type": "int64", "key": true},
                                                  {"name": "v", "type": "int64"}]},
  {"name": "f1", "primary_key": "id",
   "columns": [{"name": "id", "type": "int64", "key": true}, {"name": "d1_id", "type": "int64"},
               {"name": "d2_id", "type": "int64"}, {"name": "k", "type": "int64"}],
   "foreign_keys": [{"column": "d1_id", "ref_table": "d1", "ref_column": "id"},
                    {"column": "d2_id", "ref_table": "d2", "ref_column": "id"}]},
  {"name": "f2", "primary_key": "id",
   "columns": [{"name": "id", "type": "int64", "key": true}, {"name": "d1_id", "type": "int64"},
               {"name": "k", "type": "int64"}],
   "foreign_keys": [{"column": "d1_id", "ref_table": "d1", "ref_column": "id"}]}
]})";

inline Catalog shop(Setting setting = Setting::NonIndexed) {
  return oracle::catalog_from_text(kShopSchema,
                                   {{"d1", "id,name\n1,ann\n2,bob\n3,cat\n4,dan\n"},
                                    {"d2", "id,v\n1,10\n2,20\n3,30\n"},
                                    {"f1",
                                     "id,d1_id,d2_id,k\n1,1,1,5\n2,1,2,6\n3,2,3,5\n4,2,1,7\n5,3,2,5\n"
                                     "6,3,3,8\n7,4,1,6\n8,4,2,9\n9,1,3,5\n10,2,2,6\n"},
                                    {"f2", "id,d1_id,k\n1,1,5\n2,2,6\n3,3,5\n4,4,7\n5,1,6\n6,2,10\n"}},
                                   setting);
}

inline const char* kShopQuery =
    "SELECT COUNT(*) FROM f1, f2, d1, d2 "
    "WHERE f1.d1_id = d1.id AND f1.d2_id = d2.id AND f2.d1_id = d1.id AND f1.k = f2.k";

}  // namespace qolab::fixture
