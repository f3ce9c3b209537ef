import os


DATA_PATH = os.path.dirname(os.path.realpath(__file__))

vector_config = os.path.join(DATA_PATH, 'vector.json')
prox_config = os.path.join(DATA_PATH, 'prox.json')
limit_config = os.path.join(DATA_PATH, 'limit.json')

# Acceptance campaigns at full replication counts.
fdr_config = os.path.join(DATA_PATH, 'fdr.json')
model_config = os.path.join(DATA_PATH, 'model.json')
recovery_config = os.path.join(DATA_PATH, 'recovery.json')
attainability_config = os.path.join(DATA_PATH, 'attainability.json')
hausdorff_config = os.path.join(DATA_PATH, 'hausdorff.json')
