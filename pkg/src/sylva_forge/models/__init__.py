"""Parameter schemas, config documents, enums and the point-cloud container."""
