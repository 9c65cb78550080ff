from .run_store import RunStore, read_csv, load_states, load_manifest, ENSEMBLE_COLUMNS, TRAJECTORY_COLUMNS


PROVIDERS = ['RunStore']
