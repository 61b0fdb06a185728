from .dataset import (
    SHARD_VERSION,
    family_registry_json,
    generate_shard,
    read_shard,
    shard_data_hash,
    write_shard,
)
from .runconfig import RunConfig
from .reports import plot_rows, read_csv, write_csv
