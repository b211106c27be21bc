# Incidence-file and label-sidecar readers and writers.
