# Distillation package
