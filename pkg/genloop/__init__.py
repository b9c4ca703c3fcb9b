# Generation loop package
